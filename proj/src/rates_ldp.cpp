#include "ssep/rates_ldp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "ssep/kernel_operator.hpp"
#include "ssep/pde_solvers.hpp"

namespace ssep {

namespace {

Eigen::VectorXd weights_of(const SymmetricKernel& k) {
  Eigen::VectorXd w(k.nodes());
  for (int a = 0; a < k.nodes(); ++a) w(a) = k.trapezoid_weight(a);
  return w;
}

// sum_c w_c sigma_c sum_a w_a F(c,a) (C_k G)(c,a), the shared quadrature of
// the explicit rate formula and the quadratic form in rate_sup
double sigma_weighted_operator_pairing(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                       const SymmetricKernel& k,
                                       const Eigen::VectorXd& sig,
                                       const Eigen::VectorXd& w) {
  Eigen::MatrixXd CG = G * sig.asDiagonal() + G * w.asDiagonal() * k.values();
  double acc = 0.0;
  for (int c = 0; c < F.rows(); ++c) {
    double inner = 0.0;
    for (int a = 0; a < F.cols(); ++a) inner += w(a) * F(c, a) * CG(c, a);
    acc += w(c) * sig(c) * inner;
  }
  return acc;
}

}  // namespace

JhTerms eval_Jh_terms(const SymmetricKernel& k, const BiasSpec& h, const Params& params) {
  int M = k.M();
  const SymmetricKernel& hh = h.h;
  Eigen::VectorXd w = weights_of(k);
  Eigen::VectorXd sig = sigma_nodes_vec(params, k);
  JhTerms out;

  // Pi(lap h + M(d1h, d1h)) with Pi = (1/4) <k, .>
  Eigen::MatrixXd d1h = hh.d1_sym_field();
  Eigen::VectorXd sw = sig.cwiseProduct(w);
  Eigen::MatrixXd mh = bilinear_map(d1h, d1h, sw);
  double pairing = 0.0;
  for (int a = 0; a <= M; ++a)
    for (int b = 0; b <= M; ++b) {
      double f = mh(a, b);
      if (a > 0 && a < M && b > 0 && b < M) f += hh.laplacian_smooth(a, b);
      pairing += w(a) * w(b) * k.at(a, b) * f;
    }
  out.pi_term = -0.5 * 0.25 * pairing;

  // (1/4) int tr_D(k) (d2-d1)h(x+,x) dx ; (d2-d1)h(x+,x) = -jump_h(x)
  double tr = 0.0;
  for (int a = 0; a <= M; ++a)
    tr += w(a) * k.trace_extrapolated(a) * (-hh.jump()(a));
  out.trace_term = 0.25 * tr;

  double diag = 0.0;
  for (int a = 0; a <= M; ++a) diag += w(a) * hh.at(a, a);
  double rp = params.rho_prime();
  out.diag_term = 0.25 * rp * rp * diag;

  double grad = 0.0;
  for (int a = 0; a <= M; ++a)
    for (int b = 0; b <= M; ++b)
      grad += w(a) * w(b) * sig(a) * sig(b) * d1h(a, b) * d1h(a, b);
  out.grad_term = -grad / 8.0;
  return out;
}

double eval_Jh(const SymmetricKernel& k, const BiasSpec& h, const Params& params) {
  return eval_Jh_terms(k, h, params).total();
}

double rate_explicit(const SymmetricKernel& k, const BiasSpec& h, const Params& params) {
  Eigen::VectorXd w = weights_of(k);
  Eigen::VectorXd sig = sigma_nodes_vec(params, k);
  Eigen::MatrixXd d1h = h.h.d1_sym_field();
  return sigma_weighted_operator_pairing(d1h, d1h, k, sig, w) / 8.0;
}

RateReport rate_sup(const SymmetricKernel& k, const BiasBasis& basis,
                    const Params& params) {
  int P = basis.size();
  Eigen::VectorXd w = weights_of(k);
  Eigen::VectorXd sig = sigma_nodes_vec(params, k);
  SymmetricKernel k0 = k0_kernel(k.M(), params.rho_prime());

  // linear term b_m = -(1/8) <k - k0, lap psi_m>, lap psi_m analytic
  Eigen::VectorXd b(P);
  Eigen::MatrixXd dk = k.values() - k0.values();
  for (int m = 0; m < P; ++m) {
    const auto& e = basis[m];
    double acc = 0.0;
    for (int a = 0; a < k.nodes(); ++a)
      for (int bb = 0; bb < k.nodes(); ++bb)
        acc += w(a) * w(bb) * dk(a, bb) * e.grid.at(a, bb);
    b(m) = -e.lap_eigen * acc / 8.0;
  }

  // quadratic form Q_mn = (1/4) int sigma <d1 psi_m, C_k d1 psi_n>
  std::vector<Eigen::MatrixXd> d1(static_cast<size_t>(P));
  for (int m = 0; m < P; ++m) d1[static_cast<size_t>(m)] = basis[m].grid.d1_sym_field();
  Eigen::MatrixXd Q(P, P);
  for (int m = 0; m < P; ++m)
    for (int n = m; n < P; ++n) {
      double v = sigma_weighted_operator_pairing(d1[static_cast<size_t>(m)],
                                                 d1[static_cast<size_t>(n)], k, sig, w) /
                 4.0;
      Q(m, n) = v;
      Q(n, m) = v;
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0)
    throw std::runtime_error("rate_sup: quadratic form not positive definite "
                             "(correlation operator not admissible)");

  RateReport rep;
  rep.optimizer = Q.ldlt().solve(b);
  rep.value = 0.5 * b.dot(rep.optimizer);
  rep.hessian_condition = lmax / lmin;
  BiasSpec hstar = bias_from_coeffs(basis, rep.optimizer);
  rep.terms_at_optimum = eval_Jh_terms(k, hstar, params);
  rep.optimizer_sup_h = hstar.sup_h;
  rep.optimizer_sup_d1h = hstar.sup_d1h;
  return rep;
}

// --- Donsker-Varadhan at fixed N --------------------------------------------

double dv_reversible(const MeasureVector& mu, const Params& params) {
  if (params.rho_minus != params.rho_plus)
    throw std::invalid_argument("dv_reversible: requires rho_minus == rho_plus");
  Profile profile = steady_profile(params);
  GeneratorMatrix gen = build_generator(params, profile);
  MeasureVector nu = product_measure_vector(params, profile);
  std::uint64_t n = nu.probs.size();
  if (mu.probs.size() != n) throw std::invalid_argument("dv_reversible: size mismatch");
  std::vector<double> sf(n);
  for (std::uint64_t c = 0; c < n; ++c) sf[c] = std::sqrt(mu.probs[c] / nu.probs[c]);
  std::vector<double> lsf = gen.apply_to_function(sf);
  double acc = 0.0;
  for (std::uint64_t c = 0; c < n; ++c) acc += nu.probs[c] * sf[c] * lsf[c];
  return -acc;
}

namespace {
double dv_objective(const MeasureVector& mu, const GeneratorMatrix& gen,
                    const std::vector<double>& h) {
  std::uint64_t n = gen.states();
  double acc = 0.0;
  for (std::uint64_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (int e = 0; e < gen.events; ++e) {
      size_t k = c * static_cast<size_t>(gen.events) + static_cast<size_t>(e);
      double r = gen.rate[k];
      if (r != 0.0) s += r * (1.0 - std::exp(h[gen.target[k]] - h[c]));
    }
    acc += mu.probs[c] * s;
  }
  return acc;
}
}  // namespace

double dv_variational(const MeasureVector& mu, const GeneratorMatrix& gen, Rng& rng,
                      int restarts) {
  std::uint64_t n = gen.states();
  int ni = static_cast<int>(n);
  double best = -1e300;
  for (int trial = 0; trial < restarts; ++trial) {
    std::vector<double> h(n, 0.0);
    if (trial > 0)
      for (auto& v : h) v = 0.3 * rng.normal();
    h[0] = 0.0;

    for (int iter = 0; iter < 200; ++iter) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(ni);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(ni, ni);
      for (std::uint64_t c = 0; c < n; ++c) {
        for (int e = 0; e < gen.events; ++e) {
          size_t k = c * static_cast<size_t>(gen.events) + static_cast<size_t>(e);
          double r = gen.rate[k];
          if (r == 0.0) continue;
          std::uint64_t t = gen.target[k];
          if (t == c) continue;
          double wgt = mu.probs[c] * r * std::exp(h[t] - h[c]);
          int ti = static_cast<int>(t), ci = static_cast<int>(c);
          grad(ti) -= wgt;
          grad(ci) += wgt;
          hess(ti, ti) -= wgt;
          hess(ci, ci) -= wgt;
          hess(ti, ci) += wgt;
          hess(ci, ti) += wgt;
        }
      }
      // gauge: pin h[0]
      grad(0) = 0.0;
      hess.row(0).setZero();
      hess.col(0).setZero();
      hess(0, 0) = -1.0;
      double gnorm = grad.cwiseAbs().maxCoeff();
      if (gnorm < 1e-13) break;
      Eigen::MatrixXd reg = -hess;
      reg.diagonal().array() += 1e-12;
      Eigen::VectorXd dir = reg.ldlt().solve(grad);
      double f0 = dv_objective(mu, gen, h);
      double step = 1.0;
      std::vector<double> trialh(n);
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::uint64_t c = 0; c < n; ++c)
          trialh[c] = h[c] + step * dir(static_cast<int>(c));
        trialh[0] = 0.0;
        if (dv_objective(mu, gen, trialh) > f0) {
          h = trialh;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    best = std::max(best, dv_objective(mu, gen, h));
  }
  return best;
}

double density_dv(const std::function<double(double)>& rho_hat, const Params& params,
                  DvMode mode) {
  auto lam = [&rho_hat](double x) {
    double r = rho_hat(x);
    return std::log(r / (1.0 - r));
  };
  if (mode == DvMode::ExactN) {
    int N = params.N;
    int S = params.sites();
    double acc = 0.0;
    for (int a = 0; a < S - 1; ++a) {
      double xi = static_cast<double>(params.site_of(a)) / N;
      double xj = static_cast<double>(params.site_of(a + 1)) / N;
      double ri = rho_hat(xi), rj = rho_hat(xj);
      double d = N * (lam(xj) - lam(xi));
      double up = ri * (1.0 - rj) * std::expm1(d / (2.0 * N)) * std::expm1(d / (2.0 * N));
      double dn = (1.0 - ri) * rj * std::expm1(-d / (2.0 * N)) * std::expm1(-d / (2.0 * N));
      acc += up + dn;
    }
    return 0.25 * N * N * acc;
  }
  // continuum: (N/8) int sigma(rho_hat) |lam'|^2
  int q = 4096;
  double hq = 2.0 / q;
  double acc = 0.0;
  for (int i = 0; i <= q; ++i) {
    double x = -1.0 + i * hq;
    double eps = 1e-6;
    double xl = std::max(-1.0, x - eps), xr = std::min(1.0, x + eps);
    double dl = (lam(xr) - lam(xl)) / (xr - xl);
    double v = sigma_of(rho_hat(x)) * dl * dl;
    acc += (i == 0 || i == q ? 0.5 : 1.0) * v;
  }
  return params.N / 8.0 * acc * hq;
}

// --- correlation-scale DV ----------------------------------------------------

namespace {
// V_i = sum_{j not in {i,i+1}} etac_j D1phi(i,j); returns sum_i c_i V_i^2
double correlation_statistic(const Configuration& c, const Profile& profile,
                             const Eigen::MatrixXd& d1_lattice) {
  int S = c.sites();
  double acc = 0.0;
  for (int e = 0; e < S - 1; ++e) {
    if (bulk_rate(c, e) == 0.0) continue;
    double v = 0.0;
    for (int j = 0; j < S; ++j)
      if (j != e && j != e + 1) v += centered(c, profile, j) * d1_lattice(e, j);
    acc += v * v;
  }
  return acc;
}

Eigen::MatrixXd lattice_d1(const SymmetricKernel& phi, const Params& p) {
  int S = p.sites();
  Eigen::MatrixXd H(S, S);
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b)
      H(a, b) = phi.eval(static_cast<double>(p.site_of(a)) / p.N,
                         static_cast<double>(p.site_of(b)) / p.N);
  Eigen::MatrixXd D1(S - 1, S);
  for (int e = 0; e < S - 1; ++e)
    for (int j = 0; j < S; ++j) D1(e, j) = p.N * (H(e + 1, j) - H(e, j));
  return D1;
}
}  // namespace

double correlation_dv_exact(const SymmetricKernel& phi, double rho, const Params& params) {
  Params eq(params.N, rho, rho);
  if (eq.N > 6) throw std::invalid_argument("correlation_dv_exact: N <= 6");
  GaussianMeasureSpec spec(eq, phi);
  MeasureVector nu = exact_gaussian_measure(spec);
  Profile profile = steady_profile(eq);
  Eigen::MatrixXd d1 = lattice_d1(phi, eq);
  int S = eq.sites();
  double acc = 0.0;
  for (std::uint64_t code = 0; code < nu.probs.size(); ++code) {
    Configuration c = config_of_code(code, S);
    acc += nu.probs[code] * correlation_statistic(c, profile, d1);
  }
  return acc / (16.0 * eq.N * eq.N);
}

McEstimate correlation_dv_mc(const SymmetricKernel& phi, double rho, const Params& params,
                             int n_samples, std::uint64_t seed) {
  Params eq(params.N, rho, rho);
  GaussianMeasureSpec spec(eq, phi);
  GlauberChain chain(spec, seed);
  chain.burn_in();
  Profile profile = steady_profile(eq);
  Eigen::MatrixXd d1 = lattice_d1(phi, eq);
  int n_batches = 32;
  std::vector<double> bsum(static_cast<size_t>(n_batches), 0.0);
  std::vector<int> bcnt(static_cast<size_t>(n_batches), 0);
  for (int s = 0; s < n_samples; ++s) {
    const Configuration& c = chain.sample();
    double v = correlation_statistic(c, profile, d1);
    int b = s * n_batches / n_samples;
    bsum[static_cast<size_t>(b)] += v;
    bcnt[static_cast<size_t>(b)] += 1;
  }
  double mean = 0.0;
  for (double v : bsum) mean += v;
  mean /= n_samples;
  double var = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    double m = bsum[static_cast<size_t>(b)] / bcnt[static_cast<size_t>(b)];
    var += (m - mean) * (m - mean);
  }
  var /= (n_batches - 1);
  double scale = 1.0 / (16.0 * eq.N * eq.N);
  return {mean * scale, std::sqrt(var / n_batches) * scale};
}

double correlation_dv_continuum(const SymmetricKernel& phi, double rho) {
  int n = phi.nodes();
  double sig = sigma_of(rho);
  Eigen::VectorXd w = weights_of(phi);
  // U = sigma^{-1} id - phi ; C = U^{-1}
  Eigen::MatrixXd U = -phi.values() * w.asDiagonal();
  U.diagonal().array() += 1.0 / sig;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(U);
  double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(pivot > 1e-12 / sig))
    throw std::runtime_error("correlation_dv_continuum: tilted operator not invertible");
  Eigen::MatrixXd d1 = phi.d1_sym_field();
  double acc = 0.0;
  for (int c = 0; c < n; ++c) {
    Eigen::VectorXd v = d1.row(c).transpose();
    Eigen::VectorXd cv = lu.solve(v);
    double inner = 0.0;
    for (int a = 0; a < n; ++a) inner += w(a) * v(a) * cv(a);
    acc += w(c) * sig * inner;
  }
  return acc / 8.0;
}

}  // namespace ssep
