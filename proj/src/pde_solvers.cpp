#include "ssep/pde_solvers.hpp"

#include <cmath>

namespace ssep {

namespace {
constexpr double kPi = 3.14159265358979323846;

// second-order first derivative along rows of a smooth grid function
Eigen::MatrixXd d1_smooth(const Eigen::MatrixXd& V, double h) {
  int n = static_cast<int>(V.rows());
  Eigen::MatrixXd D(n, n);
  for (int b = 0; b < n; ++b) {
    D(0, b) = (-3.0 * V(0, b) + 4.0 * V(1, b) - V(2, b)) / (2.0 * h);
    for (int a = 1; a < n - 1; ++a) D(a, b) = (V(a + 1, b) - V(a - 1, b)) / (2.0 * h);
    D(n - 1, b) = (3.0 * V(n - 1, b) - 4.0 * V(n - 2, b) + V(n - 3, b)) / (2.0 * h);
  }
  return D;
}

Eigen::MatrixXd lap_smooth_interior(const Eigen::MatrixXd& V, double h) {
  int n = static_cast<int>(V.rows());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  double ih2 = 1.0 / (h * h);
  for (int a = 1; a < n - 1; ++a)
    for (int b = 1; b < n - 1; ++b)
      L(a, b) = (V(a + 1, b) + V(a - 1, b) + V(a, b + 1) + V(a, b - 1) - 4.0 * V(a, b)) * ih2;
  return L;
}

double grad_norm_diff(const SymmetricKernel& a, const SymmetricKernel& b) {
  SymmetricKernel d = a;
  d -= b;
  return d.grad_l2_norm();
}

struct StepTracker {
  std::vector<double> norms;
  int growth_run = 0;
  double contraction = 0.0;

  // returns false when divergence should be reported
  bool push(double s) {
    if (!norms.empty() && norms.back() > 0.0) {
      double r = s / norms.back();
      contraction = std::max(contraction, r);
      growth_run = (r > 1.0) ? growth_run + 1 : 0;
    }
    norms.push_back(s);
    return growth_run < 10;
  }
  SolveReport report(bool converged) const {
    SolveReport r;
    r.converged = converged;
    r.iterations = static_cast<int>(norms.size());
    r.final_step = norms.empty() ? 0.0 : norms.back();
    r.measured_contraction = contraction;
    r.step_norms = norms;
    return r;
  }
  void fill(SolveReport* rep, bool converged) const {
    if (rep) *rep = report(converged);
  }
};
}  // namespace

Eigen::MatrixXd bilinear_map(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                             const Eigen::VectorXd& sigma_w) {
  int n = static_cast<int>(F.rows());
  Eigen::MatrixXd out(n, n);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += F(c, a) * sigma_w(c) * G(c, b);
      out(a, b) = s;
    }
  return out;
}

Eigen::MatrixXd bilinear_map_serial(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                    const Eigen::VectorXd& sigma_w) {
  int n = static_cast<int>(F.rows());
  Eigen::MatrixXd out(n, n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += F(c, a) * sigma_w(c) * G(c, b);
      out(a, b) = s;
    }
  return out;
}

Eigen::VectorXd sigma_nodes_vec(const Params& params, const SymmetricKernel& like) {
  int n = like.nodes();
  Eigen::VectorXd s(n);
  for (int a = 0; a < n; ++a) s(a) = params.sigma_bar_at(like.x(a));
  return s;
}

SymmetricKernel bilinear_map(const SymmetricKernel& u, const SymmetricKernel& v,
                             const Params& params) {
  Eigen::VectorXd s = sigma_nodes_vec(params, u);
  Eigen::VectorXd sw(s.size());
  for (int c = 0; c < s.size(); ++c) sw(c) = s(c) * u.trapezoid_weight(c);
  SymmetricKernel out(u.M());
  out.values() = bilinear_map(u.values(), v.values(), sw);
  return out;
}

SymmetricKernel solve_poisson(const SymmetricKernel& phi, const BiasSpec& h,
                              const Params& params, const TriangleGrid& grid,
                              double tol, SolveReport* rep) {
  int M = grid.M();
  SymmetricKernel f(M);
  double phi_norm = phi.l2_norm();
  if (phi_norm < 1e-300) {
    StepTracker().fill(rep, true);
    return f;
  }
  Eigen::VectorXd sig = sigma_nodes_vec(params, phi);
  Eigen::VectorXd sw(sig.size());
  for (int c = 0; c < sig.size(); ++c) sw(c) = sig(c) * phi.trapezoid_weight(c);
  Eigen::MatrixXd D1h = h.h.d1_sym_field();
  Eigen::MatrixXd base = (2.0 / phi_norm) * phi.values();
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(M + 1);

  StepTracker track;
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd D1f = f.d1_sym_field();
    Eigen::MatrixXd cross = bilinear_map(D1f, D1h, sw);
    Eigen::MatrixXd rhs = base - cross - cross.transpose();
    SymmetricKernel next = grid.solve(rhs, delta);
    double step = grad_norm_diff(next, f);
    f = std::move(next);
    bool ok = track.push(step);
    if (step <= tol) {
      track.fill(rep, true);
      return f;
    }
    if (!ok) {
      track.fill(rep, false);
      throw SolverError("solve_poisson: contraction violation", track.report(false));
    }
  }
  track.fill(rep, false);
  throw SolverError("solve_poisson: iteration cap reached", track.report(false));
}

SymmetricKernel solve_euler_lagrange(const BiasSpec& h, const Params& params,
                                     const TriangleGrid& grid, double tol,
                                     SolveReport* rep) {
  int M = grid.M();
  double gh = grid.spacing();
  SymmetricKernel k0 = k0_kernel(M, params.rho_prime());
  Eigen::VectorXd sig = sigma_nodes_vec(params, k0);
  Eigen::VectorXd w(sig.size());
  for (int c = 0; c < sig.size(); ++c) w(c) = k0.trapezoid_weight(c);

  // static data built from the bias
  Eigen::MatrixXd D1h = d1_smooth(h.h.values(), gh);
  Eigen::MatrixXd Xi = d1_smooth(sig.asDiagonal() * D1h, gh);  // d_x(sigma d1 h)
  Eigen::MatrixXd t1 = Xi * sig.asDiagonal();                  // sigma(y) Xi(x,y)
  Eigen::MatrixXd shs = sig.asDiagonal() * h.h.values() * sig.asDiagonal();
  Eigen::MatrixXd r0 = t1 + t1.transpose() - lap_smooth_interior(shs, gh);
  Eigen::VectorXd dvec = sig.cwiseProduct(h.h.jump());
  Eigen::MatrixXd XiW = Xi * w.asDiagonal();

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(M + 1);
  SymmetricKernel f(M);
  StepTracker track;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd kmat = f.values() + k0.values() + shs;
    Eigen::MatrixXd coup = XiW * kmat;
    Eigen::MatrixXd rhs = r0 + coup + coup.transpose();
    if (dvec.cwiseAbs().maxCoeff() > 0.0) {
      for (int a = 0; a <= M; ++a)
        for (int b = 0; b <= M; ++b) rhs(a, b) += (dvec(a) + dvec(b)) * kmat(a, b);
    }
    SymmetricKernel next = grid.solve(rhs, delta);
    double step = grad_norm_diff(next, f);
    f = std::move(next);
    bool ok = track.push(step);
    if (step <= tol) {
      converged = true;
      break;
    }
    if (!ok) {
      track.fill(rep, false);
      throw SolverError("solve_euler_lagrange: contraction violation", track.report(false));
    }
  }
  if (!converged) {
    track.fill(rep, false);
    throw SolverError("solve_euler_lagrange: iteration cap reached", track.report(false));
  }
  track.fill(rep, true);

  SymmetricKernel k = f;
  k.values() += k0.values() + shs;
  double rp2 = params.rho_prime() * params.rho_prime();
  for (int a = 1; a < M; ++a) k.jump()(a) = rp2 + sig(a) * sig(a) * h.h.jump()(a);
  return k;
}

SymmetricKernel solve_main_equation(const BiasSpec& h, const Params& params,
                                    const TriangleGrid& grid, double tol,
                                    SolveReport* rep) {
  int M = grid.M();
  double gh = grid.spacing();
  SymmetricKernel zero(M);
  Eigen::VectorXd sig = sigma_nodes_vec(params, zero);
  Eigen::VectorXd sw(sig.size());
  for (int c = 0; c < sig.size(); ++c) sw(c) = sig(c) * zero.trapezoid_weight(c);
  double rp = params.rho_prime();

  // sigma'(x)/sigma(x) on nodes; sigma' = (1-2 rho_bar) rho'
  Eigen::VectorXd tau(sig.size());
  for (int a = 0; a <= M; ++a) {
    double x = zero.x(a);
    tau(a) = (1.0 - 2.0 * params.rho_bar_at(x)) * rp / sig(a);
  }

  Eigen::MatrixXd lap_h = lap_smooth_interior(h.h.values(), gh);
  Eigen::MatrixXd D1h = h.h.d1_sym_field();

  Eigen::VectorXd delta(M + 1);
  for (int a = 0; a <= M; ++a) delta(a) = h.h.jump()(a) + rp * rp / (sig(a) * sig(a));

  SymmetricKernel g(M);
  StepTracker track;
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd D1g = g.d1_sym_field();
    Eigen::MatrixXd D1gmh = D1g - D1h;
    Eigen::MatrixXd B = bilinear_map(D1g, D1gmh, sw);
    Eigen::MatrixXd rhs = lap_h - B - B.transpose();
    for (int a = 0; a <= M; ++a)
      for (int b = 0; b <= M; ++b) {
        double d1u = 2.0 * D1g(a, b) - D1h(a, b);
        double d2u = 2.0 * D1g(b, a) - D1h(b, a);
        rhs(a, b) -= tau(a) * d1u + tau(b) * d2u;
      }
    SymmetricKernel next = grid.solve(rhs, delta);
    double step = grad_norm_diff(next, g);
    g = std::move(next);
    bool ok = track.push(step);
    if (step <= tol) {
      track.fill(rep, true);
      return g;
    }
    if (!ok) {
      track.fill(rep, false);
      throw SolverError("solve_main_equation: contraction violation", track.report(false));
    }
  }
  track.fill(rep, false);
  throw SolverError("solve_main_equation: iteration cap reached", track.report(false));
}

double weak_el_residual(const SymmetricKernel& k, const BiasSpec& h,
                        const Params& params, const SymmetricKernel& phi) {
  int M = k.M();
  SymmetricKernel k0 = k0_kernel(M, params.rho_prime());
  Eigen::VectorXd sig = sigma_nodes_vec(params, k);
  Eigen::VectorXd w(sig.size());
  for (int c = 0; c < sig.size(); ++c) w(c) = k.trapezoid_weight(c);

  SymmetricKernel dk = k;
  dk -= k0;
  Eigen::MatrixXd D1d = dk.d1_sym_field();
  Eigen::MatrixXd D1p = phi.d1_sym_field();
  double grad_term = 0.0;
  for (int a = 0; a <= M; ++a)
    for (int b = 0; b <= M; ++b)
      grad_term += w(a) * w(b) * (D1d(a, b) * D1p(a, b) + D1d(b, a) * D1p(b, a));

  Eigen::MatrixXd D1h = h.h.d1_sym_field();
  Eigen::MatrixXd KW = k.values() * w.asDiagonal();
  double op_term = 0.0;
  for (int c = 0; c <= M; ++c) {
    Eigen::VectorXd v2 = D1p.row(c).transpose();
    Eigen::VectorXd cv = sig.cwiseProduct(v2) + KW * v2;
    double inner = 0.0;
    for (int a = 0; a <= M; ++a) inner += w(a) * D1h(c, a) * cv(a);
    op_term += w(c) * sig(c) * inner;
  }
  // (1/2) <grad(k-k0), grad phi> - int sigma <d1h, C_k d1 phi>; the relative
  // weight of the two terms is fixed by the closed-form value of J at a
  // stationarity pair
  return 0.5 * grad_term - op_term;
}

ContractionReport contraction_report(const TriangleGrid& grid, const BiasSpec& h,
                                     const Params& params, Rng& rng) {
  ContractionReport out;
  out.alpha = kPi * kPi / 4.0;
  out.grid_gap = grid.smallest_eigenvalue();

  int M = grid.M();
  double gh = grid.spacing();
  SymmetricKernel zero(M);
  Eigen::VectorXd sig = sigma_nodes_vec(params, zero);
  Eigen::VectorXd w(sig.size()), sw(sig.size());
  for (int c = 0; c < sig.size(); ++c) {
    w(c) = zero.trapezoid_weight(c);
    sw(c) = sig(c) * w(c);
  }
  Eigen::MatrixXd D1h = h.h.d1_sym_field();
  Eigen::MatrixXd Xi = d1_smooth(sig.asDiagonal() * d1_smooth(h.h.values(), gh), gh);
  Eigen::MatrixXd XiW = Xi * w.asDiagonal();
  Eigen::VectorXd dvec = sig.cwiseProduct(h.h.jump());
  Eigen::VectorXd delta0 = Eigen::VectorXd::Zero(M + 1);

  BiasBasis probe = BiasBasis::make(M, 8);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd c(probe.size());
    for (int m = 0; m < probe.size(); ++m) c(m) = rng.normal();
    SymmetricKernel d = probe.combine(c);
    double dn = d.grad_l2_norm();
    if (dn <= 0.0) continue;

    // Poisson difference map
    Eigen::MatrixXd D1d = d.d1_sym_field();
    Eigen::MatrixXd cross = bilinear_map(D1d, D1h, sw);
    SymmetricKernel sd = grid.solve(Eigen::MatrixXd(-cross - cross.transpose()), delta0);
    out.poisson_measured = std::max(out.poisson_measured, sd.grad_l2_norm() / dn);

    // linearised stationarity map
    Eigen::MatrixXd coup = XiW * d.values();
    Eigen::MatrixXd rhs = coup + coup.transpose();
    for (int a = 0; a <= M; ++a)
      for (int b = 0; b <= M; ++b) rhs(a, b) += (dvec(a) + dvec(b)) * d.values()(a, b);
    SymmetricKernel se = grid.solve(rhs, delta0);
    out.el_measured = std::max(out.el_measured, se.grad_l2_norm() / dn);
  }

  double inv_sqrt_alpha = 1.0 / std::sqrt(out.alpha);
  out.poisson_bound = inv_sqrt_alpha * h.h.grad_l2_norm() / 8.0;

  double xi_norm2 = 0.0;
  for (int a = 0; a <= M; ++a)
    for (int c = 0; c <= M; ++c) {
      double xi_t = Xi(a, c) / sig(c);
      xi_norm2 += w(a) * w(c) * xi_t * xi_t;
    }
  double d_sup = dvec.size() ? dvec.cwiseAbs().maxCoeff() : 0.0;
  out.el_bound = inv_sqrt_alpha *
                 (2.0 * inv_sqrt_alpha * d_sup + inv_sqrt_alpha * std::sqrt(xi_norm2) / 4.0);
  return out;
}

}  // namespace ssep
