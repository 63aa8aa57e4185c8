#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ssep/lattice.hpp"
#include "ssep/measures.hpp"
#include "ssep/rng.hpp"

namespace ssep {

// Event layout for a lattice of S = 2N-1 sites: events 0..S-2 are the bond
// swaps (bond e exchanges offsets e and e+1), event S-1 flips the leftmost
// site, event S the rightmost.  All stored rates carry the diffusive N^2/2
// prefactor, so simulated time is macroscopic.
inline int n_events(int sites) { return sites + 1; }

double bulk_rate(const Configuration& c, int bond);                     // plain c
double boundary_rate(const Configuration& c, const Params& p, int side);  // side -1/+1

// Nonlocal bias h sampled at lattice positions, with the arrays the biased
// rates need: D1(e,j) = N [h_{e+1,j} - h_{e,j}] and the profile-slope part
// of the single-bond exponent.
struct LatticeBias {
  Eigen::MatrixXd H;       // h(i/N, j/N), symmetric
  Eigen::MatrixXd D1;      // (S-1) x S
  Eigen::VectorXd d_part;  // rho' * h_{e,e+1} / (2N) per bond

  static LatticeBias from_matrix(const Params& p, const Eigen::MatrixXd& H);
};

// exact exponent of the biased jump rate for any event, computed from
// scratch (oracle for the incremental path, and the generator builder)
double delta_pi_of_event(const Params& p, const Profile& profile,
                         const LatticeBias& bias, const Configuration& c, int event);

// prefix-sum tree over event rates
class EventTree {
 public:
  explicit EventTree(int leaves);
  void set(int leaf, double v);
  void rebuild(const std::vector<double>& leaves);
  double total() const { return node_[1]; }
  int sample(double u) const;  // u in [0, total)

 private:
  int cap_;
  std::vector<double> node_;
};

// Configuration plus everything needed to run the jump chain: per-bond bias
// sums maintained incrementally, all 2N rates, and the prefix tree.
class RateState {
 public:
  RateState(const Params& p, const Profile& profile, Configuration init,
            std::optional<LatticeBias> bias = std::nullopt);

  const Params& params() const { return params_; }
  const Profile& profile() const { return profile_; }
  const Configuration& config() const { return config_; }
  bool biased() const { return bias_.has_value(); }

  double total_rate() const { return tree_.total(); }
  double rate(int event) const { return rates_[static_cast<size_t>(event)]; }
  int sample_event(double u) const { return tree_.sample(u * tree_.total()); }

  // C^h per bond (bias exponent is -delta * C / N); empty when unbiased
  double bias_c(int bond) const;
  double boundary_sum(int side) const { return side < 0 ? t_left_ : t_right_; }

  std::vector<double> rates_from_scratch() const;  // oracle path
  Eigen::VectorXd bond_sums_from_scratch() const;
  const Eigen::VectorXd& bond_sums() const { return s_; }

  void resync();  // full recomputation (also runs every 2^16 events)

  // Apply one event; obs.pre_change(offset, t) fires for every site about to
  // change, while the pre-jump configuration is still in place.
  template <class Obs>
  void apply_event(int event, double t, Obs& obs) {
    int S = config_.sites();
    if (event < S - 1) {
      obs.pre_change(event, t);
      obs.pre_change(event + 1, t);
      apply_swap(event);
    } else {
      int a = (event == S - 1) ? 0 : S - 1;
      obs.pre_change(a, t);
      apply_flip(a);
    }
    if (++events_since_sync_ >= 65536) resync();
  }

 private:
  void apply_swap(int bond);
  void apply_flip(int offset);
  void on_site_changed(int offset, double delta_eta);
  void refresh_rates_local(int offset);
  void refresh_rates_all();
  double bond_rate_value(int bond) const;
  double flip_rate_value(int side) const;

  Params params_;
  const Profile& profile_;
  Configuration config_;
  std::optional<LatticeBias> bias_;
  Eigen::VectorXd s_;  // per-bond sums  sum_{j not in bond} etac_j D1(e,j)
  double t_left_ = 0.0, t_right_ = 0.0;
  std::vector<double> rates_;
  EventTree tree_;
  double half_n2_;
  long events_since_sync_ = 0;
};

struct NullObserver {
  void hold(const Configuration&, double, double) {}
  void pre_change(int, double) {}
};

// Exact continuous-time simulation on [t0, t1).  Observers receive every
// constancy interval (including the final partial one) through hold(), and
// per-site change notices through pre_change().
template <class Obs>
void kmc_run(RateState& st, double t0, double t1, Rng& rng, Obs& obs) {
  double t = t0;
  for (;;) {
    double r = st.total_rate();
    double dt = rng.exponential() / r;
    if (t + dt >= t1) {
      obs.hold(st.config(), t, t1 - t);
      return;
    }
    obs.hold(st.config(), t, dt);
    int e = st.sample_event(rng.uniform());
    st.apply_event(e, t + dt, obs);
    t += dt;
  }
}

// ----- exact finite-state machinery (N <= 7) -------------------------------

struct GeneratorMatrix {
  Params params;
  int events;
  std::vector<std::uint64_t> target;  // states x events
  std::vector<double> rate;           // states x events, includes N^2/2

  std::uint64_t states() const { return target.size() / static_cast<size_t>(events); }
  double escape_rate(std::uint64_t code) const;
  // (L f)(eta) = sum_e rate (f(target) - f(eta))
  std::vector<double> apply_to_function(const std::vector<double>& f) const;
  // d pi / dt = Q^T pi
  void forward_derivative(const std::vector<double>& pi, std::vector<double>& out) const;
};

GeneratorMatrix build_generator(const Params& p, const Profile& profile,
                                std::optional<LatticeBias> bias = std::nullopt);

// mu^T L = 0, normalised; throws if the residual exceeds 1e-12
MeasureVector invariant_measure(const GeneratorMatrix& gen);

// Kolmogorov forward equation with adaptive embedded Runge-Kutta; outputs
// renormalised at each grid time.  t_grid must be increasing, starting >= 0.
std::vector<MeasureVector> evolve_master(const GeneratorMatrix& gen,
                                         const MeasureVector& initial,
                                         const std::vector<double>& t_grid);

// ----- pathwise change of measure ------------------------------------------

struct TrajectoryLog {
  std::vector<std::uint64_t> codes;
  std::vector<double> holds;
  double t_total = 0.0;
};

class LoggingObserver {
 public:
  explicit LoggingObserver(const Params& p) : params_(p) {}
  void hold(const Configuration& c, double, double dt) {
    log_.codes.push_back(code_of_config(c));
    log_.holds.push_back(dt);
    log_.t_total += dt;
  }
  void pre_change(int, double) {}
  const TrajectoryLog& log() const { return log_; }

 private:
  Params params_;
  TrajectoryLog log_;
};

// log of the pathwise density of the h-tilted law against the plain one
double log_rn_derivative(const TrajectoryLog& traj, const Params& p,
                         const Profile& profile, const LatticeBias& h);

// Pi(h)(eta) for a coded state (brute-force double sum)
double pi_of_code(const Params& p, const Profile& profile, const Eigen::MatrixXd& H,
                  std::uint64_t code);

}  // namespace ssep
