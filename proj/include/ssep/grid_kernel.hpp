#pragma once
#include <Eigen/Dense>
#include <functional>

namespace ssep {

// Symmetric grid function on the closed square [-1,1]^2, uniform (M+1)^2
// nodes, together with its diagonal-jump data.
//
// Sign conventions used across the PDE stack (upper triangle is
// T = {x < y}, the lower one its mirror image):
//   jump(x) = (d2-d1) f(x, x+)  evaluated on the T side
//           = (d1-d2) f(x+, x)  evaluated on the mirror side.
// The closed-form steady kernel has jump == (rho')^2 at every diagonal
// point.  Smooth symmetric functions have jump == 0.
class SymmetricKernel {
 public:
  SymmetricKernel() = default;
  explicit SymmetricKernel(int M)
      : M_(M), v_(Eigen::MatrixXd::Zero(M + 1, M + 1)),
        jump_(Eigen::VectorXd::Zero(M + 1)) {}

  static SymmetricKernel from_function(
      int M, const std::function<double(double, double)>& f);

  int M() const { return M_; }
  int nodes() const { return M_ + 1; }
  double spacing() const { return 2.0 / M_; }
  double x(int a) const { return -1.0 + a * spacing(); }

  double at(int a, int b) const { return v_(a, b); }
  void set(int a, int b, double val) { v_(a, b) = val; v_(b, a) = val; }

  const Eigen::MatrixXd& values() const { return v_; }
  Eigen::MatrixXd& values() { return v_; }

  const Eigen::VectorXd& jump() const { return jump_; }
  Eigen::VectorXd& jump() { return jump_; }

  // bilinear interpolation of the symmetric extension
  double eval(double x, double y) const;

  // d1 of the restriction to T at node (a,b), a <= b (one-sided at the
  // diagonal and at the outer edges, second order where possible)
  double d1_tri(int a, int b) const;
  // d2 of the restriction to T at node (a,b), a <= b
  double d2_tri(int a, int b) const;

  // d1 of the symmetric extension at any node; diagonal nodes carry the
  // mean of the two one-sided limits (midpoint rule across the kink)
  double d1_sym(int a, int b) const;
  double d2_sym(int a, int b) const { return d1_sym(b, a); }

  Eigen::MatrixXd d1_sym_field() const;

  // 5-point Laplacian of the grid data, valid where f is smooth
  double laplacian_smooth(int a, int b) const;

  // diagonal trace by linear extrapolation from the two nodes adjacent to
  // (a,a) in the normal direction
  double trace_extrapolated(int a) const;

  double trapezoid_weight(int a) const {
    return (a == 0 || a == M_) ? 0.5 * spacing() : spacing();
  }

  double l2_norm() const;        // on the full square
  double grad_l2_norm() const;   // on the full square, one-sided across D
  double sup_norm() const { return v_.cwiseAbs().maxCoeff(); }
  double sup_norm_d1() const;

  SymmetricKernel& operator+=(const SymmetricKernel& o) {
    v_ += o.v_;
    jump_ += o.jump_;
    return *this;
  }
  SymmetricKernel& operator-=(const SymmetricKernel& o) {
    v_ -= o.v_;
    jump_ -= o.jump_;
    return *this;
  }
  SymmetricKernel& operator*=(double c) {
    v_ *= c;
    jump_ *= c;
    return *this;
  }

 private:
  int M_ = 0;
  Eigen::MatrixXd v_;
  Eigen::VectorXd jump_;
};

SymmetricKernel operator+(SymmetricKernel a, const SymmetricKernel& b);
SymmetricKernel operator-(SymmetricKernel a, const SymmetricKernel& b);
SymmetricKernel operator*(double c, SymmetricKernel a);

// max |a-b| over all nodes
double max_diff(const SymmetricKernel& a, const SymmetricKernel& b);

}  // namespace ssep
