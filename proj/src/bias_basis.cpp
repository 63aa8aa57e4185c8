#include "ssep/bias_basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssep {

namespace {
constexpr double kPi = 3.14159265358979323846;

double u1d(int p, double x) { return std::sin(p * kPi * (x + 1.0) / 2.0); }

double psi_raw(int p, int q, double x, double y) {
  return 0.5 * (u1d(p, x) * u1d(q, y) + u1d(q, x) * u1d(p, y));
}
}  // namespace

BiasBasis BiasBasis::make(int M, int P) {
  if (P < 1) throw std::invalid_argument("BiasBasis: P >= 1");
  // enumerate p <= q ordered by p^2 + q^2, then lexicographically
  std::vector<std::pair<int, int>> modes;
  for (int p = 1; p <= P + 4; ++p)
    for (int q = p; q <= P + 4; ++q) modes.emplace_back(p, q);
  std::sort(modes.begin(), modes.end(), [](auto a, auto b) {
    int na = a.first * a.first + a.second * a.second;
    int nb = b.first * b.first + b.second * b.second;
    return na != nb ? na < nb : a < b;
  });
  modes.resize(static_cast<size_t>(P));

  BiasBasis basis;
  for (auto [p, q] : modes) {
    Element e;
    e.p = p;
    e.q = q;
    e.lap_eigen = -(kPi * kPi / 4.0) * (p * p + q * q);
    SymmetricKernel raw = SymmetricKernel::from_function(
        M, [p = p, q = q](double x, double y) { return psi_raw(p, q, x, y); });
    double sup = raw.sup_norm();
    e.scale = 1.0 / sup;
    raw *= e.scale;
    e.grid = std::move(raw);
    basis.elems_.push_back(std::move(e));
  }
  return basis;
}

double BiasBasis::eval(int m, double x, double y) const {
  const Element& e = elems_[static_cast<size_t>(m)];
  return e.scale * psi_raw(e.p, e.q, x, y);
}

SymmetricKernel BiasBasis::combine(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != size()) throw std::invalid_argument("combine: size mismatch");
  SymmetricKernel h(elems_.front().grid.M());
  for (int m = 0; m < size(); ++m) h.values() += coeffs(m) * elems_[static_cast<size_t>(m)].grid.values();
  return h;
}

Eigen::MatrixXd BiasBasis::combine_on_lattice(const Eigen::VectorXd& coeffs,
                                              const Params& params) const {
  int S = params.sites();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(S, S);
  for (int a = 0; a < S; ++a) {
    double x = static_cast<double>(params.site_of(a)) / params.N;
    for (int b = a; b < S; ++b) {
      double y = static_cast<double>(params.site_of(b)) / params.N;
      double v = 0.0;
      for (int m = 0; m < size(); ++m) v += coeffs(m) * eval(m, x, y);
      H(a, b) = v;
      H(b, a) = v;
    }
  }
  return H;
}

BiasSpec make_bias_spec(const BiasBasis& basis, Eigen::VectorXd coeffs, double eps) {
  SymmetricKernel h = basis.combine(coeffs);
  double norm = std::max(h.sup_norm(), h.sup_norm_d1());
  if (norm > 0.0) {
    double s = eps / norm;
    coeffs *= s;
    h *= s;
  }
  BiasSpec spec;
  spec.h = std::move(h);
  spec.coeffs = std::move(coeffs);
  spec.eps = eps;
  spec.sup_h = spec.h.sup_norm();
  spec.sup_d1h = spec.h.sup_norm_d1();
  int M = spec.h.M();
  double c0 = spec.h.d1_tri(0, 0) - spec.h.d2_tri(0, 0);
  double c1 = spec.h.d1_tri(M, M) - spec.h.d2_tri(M, M);
  spec.corner_defect = std::max(std::abs(c0), std::abs(c1));
  return spec;
}

BiasSpec bias_from_coeffs(const BiasBasis& basis, Eigen::VectorXd coeffs) {
  BiasSpec spec;
  spec.h = basis.combine(coeffs);
  spec.coeffs = std::move(coeffs);
  spec.sup_h = spec.h.sup_norm();
  spec.sup_d1h = spec.h.sup_norm_d1();
  spec.eps = std::max(spec.sup_h, spec.sup_d1h);
  int M = spec.h.M();
  double c0 = spec.h.d1_tri(0, 0) - spec.h.d2_tri(0, 0);
  double c1 = spec.h.d1_tri(M, M) - spec.h.d2_tri(M, M);
  spec.corner_defect = std::max(std::abs(c0), std::abs(c1));
  return spec;
}

BiasSpec zero_bias(int M) {
  BiasSpec spec;
  spec.h = SymmetricKernel(M);
  spec.coeffs = Eigen::VectorXd();
  return spec;
}

}  // namespace ssep
