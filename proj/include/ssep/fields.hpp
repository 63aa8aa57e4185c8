#pragma once
#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ssep/grid_kernel.hpp"
#include "ssep/lattice.hpp"

namespace ssep {

// correlation field: (1/4N) sum_{i != j} etac_i etac_j phi(i/N, j/N)
double pi_field(const Configuration& c, const Profile& profile, const Params& p,
                const Eigen::MatrixXd& phi_lattice);
double pi_field(const Configuration& c, const Profile& profile, const Params& p,
                const SymmetricKernel& phi);

// fluctuation field: N^{-1/2} sum_i etac_i psi(i/N)
double y_field(const Configuration& c, const Profile& profile, const Params& p,
               const std::function<double(double)>& psi);

// diagonal (nearest-neighbour) part of the tilted generator:
// (1/4) sum_{i<N-1} etac_i etac_{i+1} * jump_h(i/N)
double neumann_term(const Configuration& c, const Profile& profile, const Params& p,
                    const SymmetricKernel& h);

// Time-averaged pair correlations over a tracked site set.  Supports both
// exact event-driven accumulation (through the observer hooks of kmc_run)
// and direct snapshot accumulation; k_hat = N * time average of
// etac_i etac_j, with per-pair batch-means standard errors.
class KernelEstimate {
 public:
  KernelEstimate(const Params& p, const Profile& profile, int stride, int n_batches = 32);

  int n_pairs() const { return static_cast<int>(pair_i_.size()); }
  int pair_site_i(int p) const { return pair_i_[static_cast<size_t>(p)]; }
  int pair_site_j(int p) const { return pair_j_[static_cast<size_t>(p)]; }
  const std::vector<int>& tracked_offsets() const { return tracked_; }

  // --- event-driven exact accumulation (observer interface) ---------------
  void attach(const Configuration* config, double t0);
  void pre_change(int offset, double t);
  void hold(const Configuration&, double, double) {}
  void end_batch(double t);  // flush everything and close the current batch

  // --- direct accumulation (oracle path) ----------------------------------
  void accumulate_pairs(const Configuration& c, double dt);
  void close_batch_direct();

  // fill one unit-time batch with prescribed kernel samples (diagnostics:
  // lets the quadrature pairing run against a reference kernel)
  void load_reference(const std::function<double(double, double)>& k);

  // estimates; valid once total time > 0
  double total_time() const { return total_time_; }
  double k_hat(int pair) const;
  double stderr_of(int pair) const;
  Eigen::MatrixXd k_hat_matrix() const;  // dense over tracked offsets
  double position_of_offset(int offset) const;

  // quadrature pairing (1/4) int int k_hat(x,y) f(x,y) dx dy over the
  // tracked sublattice (diagonal excluded, both triangles counted)
  double pairing(const std::function<double(double, double)>& f) const;

 private:
  Params params_;
  const Profile& profile_;
  int n_batches_;
  std::vector<int> tracked_;
  std::vector<int> pair_i_, pair_j_;          // offsets
  std::vector<std::vector<int>> partners_of_;  // offset -> pair ids
  const Configuration* cfg_ = nullptr;
  std::vector<double> last_t_;     // per pair
  std::vector<double> batch_acc_;  // per pair, current batch
  std::vector<std::vector<double>> batches_;   // per pair, closed batch integrals
  std::vector<double> batch_len_;
  double batch_t0_ = 0.0;
  double total_time_ = 0.0;
  double direct_time_ = 0.0;
};

// time-averaged occupation per site, exact through the same hooks
class OccupationEstimate {
 public:
  OccupationEstimate(int sites) : acc_(static_cast<size_t>(sites), 0.0),
                                  last_(static_cast<size_t>(sites), 0.0) {}
  void attach(const Configuration* config, double t0);
  void pre_change(int offset, double t);
  void hold(const Configuration&, double, double) {}
  void finish(double t);
  double mean(int offset) const { return acc_[static_cast<size_t>(offset)] / time_; }

 private:
  const Configuration* cfg_ = nullptr;
  std::vector<double> acc_, last_;
  double t0_ = 0.0, time_ = 0.0;
};

// Q_phi(Pi_hat) = Pi_hat(d1 phi) / ||phi||_2, with Pi_hat the quadrature
// pairing (1/4) <k_hat, .> over the tracked pair lattice.
double regularity_functional(const KernelEstimate& est, const SymmetricKernel& phi);

// same pairing against an arbitrary field matrix F(x,y) sampled on demand
double empirical_pairing(const KernelEstimate& est,
                         const std::function<double(double, double)>& f);

}  // namespace ssep
