#include "ssep/kernel_operator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace ssep {

double k0_eval(double x, double y, double rho_prime) {
  if (x > y) std::swap(x, y);
  return -rho_prime * rho_prime / 2.0 * (1.0 + x) * (1.0 - y);
}

SymmetricKernel k0_kernel(int M, double rho_prime) {
  SymmetricKernel k = SymmetricKernel::from_function(
      M, [rho_prime](double x, double y) { return k0_eval(x, y, rho_prime); });
  for (int a = 1; a < M; ++a) k.jump()(a) = rho_prime * rho_prime;
  return k;
}

static Eigen::VectorXd trapezoid_weights(const SymmetricKernel& k) {
  int n = k.nodes();
  Eigen::VectorXd w(n);
  for (int a = 0; a < n; ++a) w(a) = k.trapezoid_weight(a);
  return w;
}

static Eigen::VectorXd sigma_nodes(const SymmetricKernel& k, const Params& p) {
  int n = k.nodes();
  Eigen::VectorXd s(n);
  for (int a = 0; a < n; ++a) s(a) = p.sigma_bar_at(k.x(a));
  return s;
}

KernelOperator::KernelOperator(const SymmetricKernel& k, Eigen::VectorXd sigma_diag)
    : sigma_(std::move(sigma_diag)), w_(trapezoid_weights(k)) {
  if (sigma_.size() != w_.size())
    throw std::invalid_argument("KernelOperator: sigma size mismatch");
  C_ = k.values() * w_.asDiagonal();
  C_.diagonal() += sigma_;
}

KernelOperator::KernelOperator(const SymmetricKernel& k, const Params& params)
    : KernelOperator(k, sigma_nodes(k, params)) {}

Eigen::VectorXd KernelOperator::solve(const Eigen::VectorXd& psi) const {
  if (!factored_) {
    lu_.compute(C_);
    factored_ = true;
  }
  return lu_.solve(psi);
}

SymmetricKernel g_from_k(const SymmetricKernel& k, const Params& params) {
  Eigen::VectorXd sig = sigma_nodes(k, params);
  Eigen::VectorXd w = trapezoid_weights(k);
  int n = k.nodes();
  // G = Sigma^{-1} K (Sigma + W K)^{-1}
  Eigen::MatrixXd B = w.asDiagonal() * k.values();
  B.diagonal() += sig;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  double rc = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(rc > 1e-12 * sig.maxCoeff()))
    throw std::runtime_error("g_from_k: correlation operator numerically singular");
  Eigen::MatrixXd G = sig.cwiseInverse().asDiagonal() * k.values();
  G = lu.solve(G.transpose()).transpose();  // right-multiply by B^{-1}

  SymmetricKernel g(k.M());
  g.values() = 0.5 * (G + G.transpose());
  for (int a = 0; a < n; ++a) g.jump()(a) = k.jump()(a) / (sig(a) * sig(a));
  g.jump()(0) = 0.0;
  g.jump()(n - 1) = 0.0;
  return g;
}

SymmetricKernel k_from_g(const SymmetricKernel& g, const Params& params) {
  Eigen::VectorXd sig = sigma_nodes(g, params);
  Eigen::VectorXd w = trapezoid_weights(g);
  int n = g.nodes();
  // K = (I - Sigma G W)^{-1} Sigma G Sigma
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) -
                      sig.asDiagonal() * g.values() * w.asDiagonal();
  Eigen::MatrixXd rhs = sig.asDiagonal() * g.values() * sig.asDiagonal();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::MatrixXd K = lu.solve(rhs);

  SymmetricKernel k(g.M());
  k.values() = 0.5 * (K + K.transpose());
  for (int a = 0; a < n; ++a) k.jump()(a) = sig(a) * sig(a) * g.jump()(a);
  k.jump()(0) = 0.0;
  k.jump()(n - 1) = 0.0;
  return k;
}

double largest_form_eigenvalue(const SymmetricKernel& ker) {
  Eigen::VectorXd w = trapezoid_weights(ker);
  Eigen::VectorXd ws = w.cwiseSqrt();
  Eigen::MatrixXd S = ws.asDiagonal() * ker.values() * ws.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace ssep
