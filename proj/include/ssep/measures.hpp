#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ssep/grid_kernel.hpp"
#include "ssep/lattice.hpp"
#include "ssep/rng.hpp"

namespace ssep {

// Probability vector over all 2^(2N-1) configurations, indexed by the
// little-endian bit code of lattice.hpp.  Exact enumeration stack; N <= 7.
struct MeasureVector {
  Params params;
  std::vector<double> probs;

  std::uint64_t states() const { return probs.size(); }
  double expectation(const std::vector<double>& f) const;
  bool strictly_positive() const;
  double total_variation(const MeasureVector& other) const;
};

int enumeration_site_count(const Params& p);  // throws if N > 7

MeasureVector product_measure_vector(const Params& params, const Profile& profile);

// nu_g: product Bernoulli reweighted by exp[ 2 Pi(g) ],
// 2 Pi(g)(eta) = (1/2N) sum_{i != j} g(i/N, j/N) etac_i etac_j.
struct GaussianMeasureSpec {
  Params params;
  Profile profile;
  Eigen::MatrixXd g_lattice;  // g sampled at (i/N, j/N), zero diagonal unused
  std::optional<double> log_partition;

  GaussianMeasureSpec(const Params& p, const SymmetricKernel& g);
  GaussianMeasureSpec(const Params& p, Eigen::MatrixXd g_lattice_values);
};

// returns the normalised measure and fills spec.log_partition
MeasureVector exact_gaussian_measure(GaussianMeasureSpec& spec);
MeasureVector exact_gaussian_measure_serial(GaussianMeasureSpec& spec);

// single-site Metropolis chain targeting nu_g; one sweep = (2N-1) proposals.
// Defaults: burn-in 20 sweeps, thinning 2 sweeps between samples.
class GlauberChain {
 public:
  GlauberChain(const GaussianMeasureSpec& spec, std::uint64_t seed,
               std::uint64_t stream = 0);

  void sweep();
  void burn_in(int sweeps = 20);
  const Configuration& sample(int thin_sweeps = 2);  // advances then returns
  const Configuration& state() const { return config_; }

  // probability of proposing-and-accepting the flip of site a from the
  // current state (used by the detailed-balance check)
  double transition_probability(int a) const;
  double acceptance_ratio(int a) const;

 private:
  void flip(int a);
  const GaussianMeasureSpec& spec_;
  Configuration config_;
  std::vector<double> local_sum_;  // T_a = sum_{j != a} etac_j g(a,j)
  Rng rng_;
};

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// E[prod_{a in I} etac_a]; sites are lattice site indices (not offsets)
double npoint_correlation(const MeasureVector& mu, const Profile& profile,
                          const std::vector<int>& sites);
McEstimate npoint_correlation_mc(GlauberChain& chain, const Profile& profile,
                                 const std::vector<int>& sites, int n_samples,
                                 int n_batches = 32);

// X-statistics of centred occupations and their concentration diagnostics.
struct CorrelationTensorSpec {
  int d = 1;
  std::vector<int> offsets;   // J, contains 0
  Eigen::VectorXd a1;         // d == 1: A(i0) over offsets of Lambda_N
  Eigen::MatrixXd a2;         // d == 2: A(i0, i1)
  bool const_offdiag = false; // d == 2 fast path: A = 1 off-diagonal, J={0}

  double hs_norm() const;
  double evaluate(const Configuration& c, const Profile& profile) const;
};

// MC estimate of E_nu_bar[ exp( c |X|^{2/d} / ||A||_HS^{2/d} ) ]
McEstimate concentration_check(const CorrelationTensorSpec& spec, double c,
                               const Params& params, const Profile& profile,
                               int samples, Rng& rng);

}  // namespace ssep
