#pragma once
#include <vector>

#include "ssep/dynamics.hpp"
#include "ssep/grid_kernel.hpp"
#include "ssep/lattice.hpp"
#include "ssep/measures.hpp"
#include "ssep/rng.hpp"

namespace ssep {

// sum mu log(mu/nu), 0 log 0 = 0; +inf where nu vanishes on the support of mu
double relative_entropy(const MeasureVector& mu, const MeasureVector& nu);

// nu( Gamma_h(sqrt f) ) with Gamma_h = (1/4) sum_events c_h [d sqrt f]^2
// (plain jump-rate normalisation; gen rates carry N^2/2, rescaled inside)
double carre_du_champ(const GeneratorMatrix& gen, const MeasureVector& nu,
                      const std::vector<double>& f);

// same quadratic form under the full chain rates (N^2/2) c_h, i.e. the
// object appearing in the entropy-production inequality
double dirichlet_form_full(const GeneratorMatrix& gen, const MeasureVector& nu,
                           const std::vector<double>& f);

// adjoint applied to 1 in L^2(nu), plain jump-rate normalisation:
// (L* 1)(eta) = sum_eta' [ c(eta',eta) nu(eta')/nu(eta) - c(eta,eta') ]
std::vector<double> adjoint_one(const GeneratorMatrix& gen, const MeasureVector& nu);

struct ProductionPoint {
  double t = 0.0;
  double entropy = 0.0;
  double dH_dt = 0.0;   // analytic, from the forward equation
  double bound = 0.0;   // -Gamma_full + nu(f (N^2/2) L*1)
  double margin = 0.0;  // bound - dH_dt, expected >= 0
};

// verify dH/dt <= -nu(Gamma(sqrt f_t)) + nu(f_t L*1) along a forward-equation
// solution started from `initial`
std::vector<ProductionPoint> entropy_production_check(const GeneratorMatrix& gen,
                                                      const MeasureVector& nu,
                                                      const MeasureVector& initial,
                                                      const std::vector<double>& t_grid);

struct EntropySeries {
  std::vector<double> times;
  std::vector<double> entropy;
  std::vector<double> bound;
  std::vector<double> margin;
  double plateau = 0.0;       // H at the largest time
  bool plateau_settled = false;  // H moved < 1% over the last decade of t
  double decay_rate = 0.0;    // fitted early exponential rate
};

// Relax the product measure under the (possibly biased) dynamics and track
// H(f_t nu | nu) for the reference measure nu built from the kernel g
// sampled at (i/N, j/N); g == nullptr means the product reference.
EntropySeries entropy_decay_experiment(const Params& params, const SymmetricKernel* g,
                                       const Eigen::MatrixXd* h_lattice,
                                       const std::vector<double>& t_grid);

// crude LSI-constant probe: max over random densities of
// H(f nu | nu) / (N^2 nu(Gamma_h(sqrt f)));  diagnostic only
double lsi_constant_estimate(const GeneratorMatrix& gen, const MeasureVector& nu,
                             Rng& rng, int trials = 20);

}  // namespace ssep
