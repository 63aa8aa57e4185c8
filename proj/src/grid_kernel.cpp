#include "ssep/grid_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssep {

SymmetricKernel SymmetricKernel::from_function(
    int M, const std::function<double(double, double)>& f) {
  SymmetricKernel k(M);
  for (int a = 0; a <= M; ++a)
    for (int b = a; b <= M; ++b) {
      double val = f(k.x(a), k.x(b));
      k.v_(a, b) = val;
      k.v_(b, a) = val;
    }
  return k;
}

double SymmetricKernel::eval(double x, double y) const {
  if (x > y) std::swap(x, y);
  double h = spacing();
  double fx = (x + 1.0) / h, fy = (y + 1.0) / h;
  int a = std::clamp(static_cast<int>(std::floor(fx)), 0, M_ - 1);
  int b = std::clamp(static_cast<int>(std::floor(fy)), 0, M_ - 1);
  double tx = fx - a, ty = fy - b;
  return (1 - tx) * (1 - ty) * v_(a, b) + tx * (1 - ty) * v_(a + 1, b) +
         (1 - tx) * ty * v_(a, b + 1) + tx * ty * v_(a + 1, b + 1);
}

double SymmetricKernel::d1_tri(int a, int b) const {
  double h = spacing();
  if (a == b) {
    // backward one-sided into T
    if (a >= 2) return (3.0 * v_(a, b) - 4.0 * v_(a - 1, b) + v_(a - 2, b)) / (2.0 * h);
    if (a >= 1) return (v_(a, b) - v_(a - 1, b)) / h;
    return (v_(1, b) - v_(0, b)) / h;  // corner, first order
  }
  if (a == 0) {
    if (b >= 2) return (-3.0 * v_(0, b) + 4.0 * v_(1, b) - v_(2, b)) / (2.0 * h);
    return (v_(1, b) - v_(0, b)) / h;
  }
  // centered; a+1 <= b holds since a < b
  return (v_(a + 1, b) - v_(a - 1, b)) / (2.0 * h);
}

double SymmetricKernel::d2_tri(int a, int b) const {
  double h = spacing();
  if (a == b) {
    // forward one-sided into T
    if (b + 2 <= M_) return (-3.0 * v_(a, b) + 4.0 * v_(a, b + 1) - v_(a, b + 2)) / (2.0 * h);
    if (b + 1 <= M_) return (v_(a, b + 1) - v_(a, b)) / h;
    return (v_(a, M_) - v_(a, M_ - 1)) / h;  // corner, first order
  }
  if (b == M_) {
    if (b - 2 >= a) return (3.0 * v_(a, b) - 4.0 * v_(a, b - 1) + v_(a, b - 2)) / (2.0 * h);
    return (v_(a, b) - v_(a, b - 1)) / h;
  }
  return (v_(a, b + 1) - v_(a, b - 1)) / (2.0 * h);
}

double SymmetricKernel::d1_sym(int a, int b) const {
  if (a < b) return d1_tri(a, b);
  if (a > b) return d2_tri(b, a);
  return 0.5 * (d1_tri(a, a) + d2_tri(a, a));
}

Eigen::MatrixXd SymmetricKernel::d1_sym_field() const {
  Eigen::MatrixXd d(M_ + 1, M_ + 1);
  for (int a = 0; a <= M_; ++a)
    for (int b = 0; b <= M_; ++b) d(a, b) = d1_sym(a, b);
  return d;
}

double SymmetricKernel::laplacian_smooth(int a, int b) const {
  if (a <= 0 || a >= M_ || b <= 0 || b >= M_)
    throw std::out_of_range("laplacian_smooth: interior nodes only");
  double h2 = spacing() * spacing();
  return (v_(a + 1, b) + v_(a - 1, b) + v_(a, b + 1) + v_(a, b - 1) - 4.0 * v_(a, b)) / h2;
}

double SymmetricKernel::trace_extrapolated(int a) const {
  if (a >= 2 && a + 2 <= M_) return 2.0 * v_(a - 1, a + 1) - v_(a - 2, a + 2);
  if (a >= 1 && a + 1 <= M_) return v_(a - 1, a + 1);
  return v_(a, a);
}

double SymmetricKernel::l2_norm() const {
  double s = 0.0;
  for (int a = 0; a <= M_; ++a) {
    double wa = trapezoid_weight(a);
    for (int b = 0; b <= M_; ++b) s += wa * trapezoid_weight(b) * v_(a, b) * v_(a, b);
  }
  return std::sqrt(s);
}

double SymmetricKernel::grad_l2_norm() const {
  double s = 0.0;
  for (int a = 0; a <= M_; ++a) {
    double wa = trapezoid_weight(a);
    for (int b = 0; b <= M_; ++b) {
      double g1 = d1_sym(a, b), g2 = d1_sym(b, a);
      s += wa * trapezoid_weight(b) * (g1 * g1 + g2 * g2);
    }
  }
  return std::sqrt(s);
}

double SymmetricKernel::sup_norm_d1() const {
  double m = 0.0;
  for (int a = 0; a <= M_; ++a)
    for (int b = 0; b <= M_; ++b) m = std::max(m, std::abs(d1_sym(a, b)));
  return m;
}

SymmetricKernel operator+(SymmetricKernel a, const SymmetricKernel& b) { return a += b; }
SymmetricKernel operator-(SymmetricKernel a, const SymmetricKernel& b) { return a -= b; }
SymmetricKernel operator*(double c, SymmetricKernel a) { return a *= c; }

double max_diff(const SymmetricKernel& a, const SymmetricKernel& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

}  // namespace ssep
