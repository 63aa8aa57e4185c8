#pragma once
#include <Eigen/Dense>

#include "ssep/grid_kernel.hpp"
#include "ssep/lattice.hpp"

namespace ssep {

// Closed-form steady-state correlation kernel: harmonic off the diagonal,
// normal-derivative jump (rho')^2 across it, zero on the square's boundary.
double k0_eval(double x, double y, double rho_prime);

SymmetricKernel k0_kernel(int M, double rho_prime);

// Correlation operator  C = sigma + k  acting on 1-D grid functions by
// multiplication plus Nystrom quadrature (composite trapezoid on the kernel
// grid).  Also hosts the algebra relating a correlation kernel k and the
// inverse-correlation kernel g through  sigma + k = (sigma^{-1} - g)^{-1}.
class KernelOperator {
 public:
  KernelOperator(const SymmetricKernel& k, Eigen::VectorXd sigma_diag);
  KernelOperator(const SymmetricKernel& k, const Params& params);

  int points() const { return static_cast<int>(sigma_.size()); }
  const Eigen::MatrixXd& dense() const { return C_; }  // Sigma + K W
  Eigen::VectorXd apply(const Eigen::VectorXd& psi) const { return C_ * psi; }
  Eigen::VectorXd solve(const Eigen::VectorXd& psi) const;

  const Eigen::VectorXd& sigma() const { return sigma_; }
  const Eigen::VectorXd& weights() const { return w_; }

 private:
  Eigen::VectorXd sigma_;
  Eigen::VectorXd w_;
  Eigen::MatrixXd C_;
  mutable Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  mutable bool factored_ = false;
};

// g = sigma^{-1} - (sigma + k)^{-1}, returned as a kernel on the same grid.
// Throws if sigma + k is not invertible (near-singular pivot).
SymmetricKernel g_from_k(const SymmetricKernel& k, const Params& params);

// k with  sigma + k = (sigma^{-1} - g)^{-1}
SymmetricKernel k_from_g(const SymmetricKernel& g, const Params& params);

// largest eigenvalue of the quadrature-symmetrised bilinear form
// u -> int int u(x) ker(x,y) u(y); <= 0 means the kernel is negative.
double largest_form_eigenvalue(const SymmetricKernel& ker);

}  // namespace ssep
