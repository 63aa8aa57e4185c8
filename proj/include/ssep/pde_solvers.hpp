#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "ssep/bias_basis.hpp"
#include "ssep/grid_kernel.hpp"
#include "ssep/kernel_operator.hpp"
#include "ssep/lattice.hpp"
#include "ssep/rng.hpp"
#include "ssep/triangle_grid.hpp"

namespace ssep {

// int u(z,x) sigma(z) v(z,y) dz by composite trapezoid on the z grid.
// Field matrices are indexed (first argument, second argument); sigma_w is
// the premultiplied vector sigma(z_c) * w_c.  The OpenMP kernel and the
// serial reference compute identical sums in the same per-entry order.
Eigen::MatrixXd bilinear_map(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                             const Eigen::VectorXd& sigma_w);
Eigen::MatrixXd bilinear_map_serial(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                    const Eigen::VectorXd& sigma_w);

SymmetricKernel bilinear_map(const SymmetricKernel& u, const SymmetricKernel& v,
                             const Params& params);

Eigen::VectorXd sigma_nodes_vec(const Params& params, const SymmetricKernel& like);

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double final_step = 0.0;
  double measured_contraction = 0.0;  // max ratio of consecutive step norms
  std::vector<double> step_norms;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport rep)
      : std::runtime_error(what), report(std::move(rep)) {}
  SolveReport report;
};

// Fixed-point solvers.  Plain iteration u <- S u, stop when the gradient
// norm of the increment drops below tol, abort after `cap` iterations or on
// ten consecutive increases of the step norm (contraction violation).
// Bias fields are assumed smooth on the closed square (diagonal jump data
// of h enters only through the recorded jump vector).

// (1/2) lap f + (1/2) M(d1 f, d1 h) + (1/2) M(d1 h, d1 f) = phi / ||phi||_2,
// f = 0 on the boundary, zero diagonal jump.
SymmetricKernel solve_poisson(const SymmetricKernel& phi, const BiasSpec& h,
                              const Params& params, const TriangleGrid& grid,
                              double tol = 1e-10, SolveReport* rep = nullptr);

// Correlation kernel k_h solving the biased stationarity equation, via the
// substitution f = k - k0 - sigma h sigma (homogeneous Neumann data for f).
SymmetricKernel solve_euler_lagrange(const BiasSpec& h, const Params& params,
                                     const TriangleGrid& grid, double tol = 1e-10,
                                     SolveReport* rep = nullptr);

// Inverse-correlation kernel g_h: nonlinear fixed point with diagonal jump
// (d2-d1)(g-h)(x,x+) = (rho')^2 / sigma(x)^2.
SymmetricKernel solve_main_equation(const BiasSpec& h, const Params& params,
                                    const TriangleGrid& grid, double tol = 1e-10,
                                    SolveReport* rep = nullptr);

// residual of the weak stationarity identity for (k, h) against a test
// function phi:  (1/2) <grad(k-k0), grad phi> + (1/2) int sigma(z)
// <d1 h(z,.), C_k d1 phi(z,.)> dz
double weak_el_residual(const SymmetricKernel& k, const BiasSpec& h,
                        const Params& params, const SymmetricKernel& phi);

struct ContractionReport {
  double alpha = 0.0;            // Poincare gap used in the bounds (pi^2/4)
  double grid_gap = 0.0;         // measured smallest mixed-BC eigenvalue
  double poisson_measured = 0.0;
  double poisson_bound = 0.0;
  double el_measured = 0.0;
  double el_bound = 0.0;
};

ContractionReport contraction_report(const TriangleGrid& grid, const BiasSpec& h,
                                     const Params& params, Rng& rng);

}  // namespace ssep
