#pragma once
#include <functional>
#include <optional>

#include "ssep/dynamics.hpp"
#include "ssep/fields.hpp"

namespace ssep {

// Composite observer wiring both estimators into the jump chain.
struct PairAndOccupation {
  KernelEstimate& pairs;
  OccupationEstimate& occupation;
  void hold(const Configuration&, double, double) {}
  void pre_change(int a, double t) {
    pairs.pre_change(a, t);
    occupation.pre_change(a, t);
  }
};

struct SimulationSetup {
  Params params;
  std::optional<LatticeBias> bias;
  double T = 100.0;
  double burnin = 10.0;
  int stride = 1;
  int batches = 32;
  std::uint64_t seed = 1;
};

// Burn in, then accumulate exact pair integrals over `batches` equal time
// windows.  checkpoint_batches (optional, increasing) selects batch counts
// after which a cumulative k_hat matrix snapshot is recorded.
struct SimulationOutput {
  KernelEstimate pairs;
  OccupationEstimate occupation;
  std::vector<Eigen::MatrixXd> checkpoints;
};

inline SimulationOutput run_pair_experiment(
    const SimulationSetup& s, const Profile& profile,
    const std::vector<int>& checkpoint_batches = {},
    const std::function<void(double, const Configuration&)>& on_batch = {}) {
  Rng rng(s.seed, 0);
  Configuration init = sample_product(profile, rng);
  RateState st(s.params, profile, std::move(init), s.bias);
  NullObserver sink;
  kmc_run(st, 0.0, s.burnin, rng, sink);

  KernelEstimate pairs(s.params, profile, s.stride, s.batches);
  OccupationEstimate occ(s.params.sites());
  pairs.attach(&st.config(), s.burnin);
  occ.attach(&st.config(), s.burnin);
  PairAndOccupation both{pairs, occ};

  std::vector<Eigen::MatrixXd> snaps;
  double bl = s.T / s.batches;
  size_t next_cp = 0;
  for (int b = 0; b < s.batches; ++b) {
    double t0 = s.burnin + b * bl;
    double t1 = s.burnin + (b + 1) * bl;
    kmc_run(st, t0, t1, rng, both);
    pairs.end_batch(t1);
    if (on_batch) on_batch(t1, st.config());
    if (next_cp < checkpoint_batches.size() && b + 1 == checkpoint_batches[next_cp]) {
      snaps.push_back(pairs.k_hat_matrix());
      ++next_cp;
    }
  }
  occ.finish(s.burnin + s.T);
  return {std::move(pairs), std::move(occ), std::move(snaps)};
}

}  // namespace ssep
