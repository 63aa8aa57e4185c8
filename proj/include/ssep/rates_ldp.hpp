#pragma once
#include <Eigen/Dense>
#include <functional>

#include "ssep/bias_basis.hpp"
#include "ssep/dynamics.hpp"
#include "ssep/grid_kernel.hpp"
#include "ssep/lattice.hpp"
#include "ssep/measures.hpp"
#include "ssep/rng.hpp"

namespace ssep {

struct JhTerms {
  double pi_term = 0.0;     // -(1/2) Pi(lap h + M(d1h, d1h))
  double trace_term = 0.0;  // (1/4) int tr_D(k) (d2-d1)h(x+,x) dx
  double diag_term = 0.0;   // (rho'^2/4) int h(x,x) dx
  double grad_term = 0.0;   // -(1/8) int sigma sigma (d1 h)^2
  double total() const { return pi_term + trace_term + diag_term + grad_term; }
};

JhTerms eval_Jh_terms(const SymmetricKernel& k, const BiasSpec& h, const Params& params);
double eval_Jh(const SymmetricKernel& k, const BiasSpec& h, const Params& params);

// (1/8) int sigma(z) < d1 h(z,.), (sigma + k) d1 h(z,.) > dz
double rate_explicit(const SymmetricKernel& k, const BiasSpec& h, const Params& params);

struct RateReport {
  double value = 0.0;
  Eigen::VectorXd optimizer;
  JhTerms terms_at_optimum;
  double hessian_condition = 0.0;
  double optimizer_sup_h = 0.0;
  double optimizer_sup_d1h = 0.0;
};

// Concave quadratic maximisation of J over the basis span; throws if the
// quadratic form (built from sigma + k) is not positive definite.
RateReport rate_sup(const SymmetricKernel& k, const BiasBasis& basis,
                    const Params& params);

// --- occupation-measure rate functionals at fixed N -------------------------

// Dirichlet form of sqrt(d mu / d nu_rho); requires rho_minus == rho_plus
double dv_reversible(const MeasureVector& mu, const Params& params);

// sup_{u = e^h > 0} mu(-L u / u) by damped Newton ascent with restarts
double dv_variational(const MeasureVector& mu, const GeneratorMatrix& gen, Rng& rng,
                      int restarts = 10);

enum class DvMode { ExactN, Continuum };

// cost of holding a smooth density profile rho_hat (equilibrium reference
// density rho = rho_minus = rho_plus); returns the nonnegative rate
double density_dv(const std::function<double(double)>& rho_hat, const Params& params,
                  DvMode mode);

// cost of holding the correlation structure tilted by phi at equilibrium
// density rho; finite-N modes use the tilted Gaussian measure.
double correlation_dv_exact(const SymmetricKernel& phi, double rho, const Params& params);
McEstimate correlation_dv_mc(const SymmetricKernel& phi, double rho, const Params& params,
                             int n_samples, std::uint64_t seed);
double correlation_dv_continuum(const SymmetricKernel& phi, double rho);

}  // namespace ssep
