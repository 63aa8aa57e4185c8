#include "ssep/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace ssep {

double pi_field(const Configuration& c, const Profile& profile, const Params& p,
                const Eigen::MatrixXd& phi_lattice) {
  int S = c.sites();
  double acc = 0.0;
  for (int a = 0; a < S; ++a) {
    double ea = centered(c, profile, a);
    for (int b = a + 1; b < S; ++b)
      acc += ea * centered(c, profile, b) *
             (phi_lattice(a, b) + phi_lattice(b, a));
  }
  return acc / (4.0 * p.N);
}

double pi_field(const Configuration& c, const Profile& profile, const Params& p,
                const SymmetricKernel& phi) {
  int S = c.sites();
  double acc = 0.0;
  for (int a = 0; a < S; ++a) {
    double xa = static_cast<double>(p.site_of(a)) / p.N;
    double ea = centered(c, profile, a);
    for (int b = a + 1; b < S; ++b) {
      double xb = static_cast<double>(p.site_of(b)) / p.N;
      acc += 2.0 * ea * centered(c, profile, b) * phi.eval(xa, xb);
    }
  }
  return acc / (4.0 * p.N);
}

double y_field(const Configuration& c, const Profile& profile, const Params& p,
               const std::function<double(double)>& psi) {
  int S = c.sites();
  double acc = 0.0;
  for (int a = 0; a < S; ++a)
    acc += centered(c, profile, a) * psi(static_cast<double>(p.site_of(a)) / p.N);
  return acc / std::sqrt(static_cast<double>(p.N));
}

namespace {
double jump_at(const SymmetricKernel& h, double x) {
  double t = (x + 1.0) / h.spacing();
  int a = std::clamp(static_cast<int>(std::floor(t)), 0, h.M() - 1);
  double f = t - a;
  return (1.0 - f) * h.jump()(a) + f * h.jump()(a + 1);
}
}  // namespace

double neumann_term(const Configuration& c, const Profile& profile, const Params& p,
                    const SymmetricKernel& h) {
  int S = c.sites();
  double acc = 0.0;
  for (int a = 0; a < S - 1; ++a) {
    double x = static_cast<double>(p.site_of(a)) / p.N;
    acc += centered(c, profile, a) * centered(c, profile, a + 1) * jump_at(h, x);
  }
  return acc / 4.0;
}

KernelEstimate::KernelEstimate(const Params& p, const Profile& profile, int stride,
                               int n_batches)
    : params_(p), profile_(profile), n_batches_(n_batches) {
  if (stride < 1) throw std::invalid_argument("KernelEstimate: stride >= 1");
  int S = p.sites();
  for (int a = 0; a < S; a += stride) tracked_.push_back(a);
  partners_of_.resize(static_cast<size_t>(S));
  for (size_t u = 0; u < tracked_.size(); ++u)
    for (size_t v = u + 1; v < tracked_.size(); ++v) {
      int id = static_cast<int>(pair_i_.size());
      pair_i_.push_back(tracked_[u]);
      pair_j_.push_back(tracked_[v]);
      partners_of_[static_cast<size_t>(tracked_[u])].push_back(id);
      partners_of_[static_cast<size_t>(tracked_[v])].push_back(id);
    }
  last_t_.assign(pair_i_.size(), 0.0);
  batch_acc_.assign(pair_i_.size(), 0.0);
  batches_.assign(pair_i_.size(), {});
}

void KernelEstimate::attach(const Configuration* config, double t0) {
  cfg_ = config;
  batch_t0_ = t0;
  std::fill(last_t_.begin(), last_t_.end(), t0);
}

void KernelEstimate::pre_change(int offset, double t) {
  const auto& ids = partners_of_[static_cast<size_t>(offset)];
  if (ids.empty() || cfg_ == nullptr) return;
  for (int id : ids) {
    size_t k = static_cast<size_t>(id);
    double ei = centered(*cfg_, profile_, pair_i_[k]);
    double ej = centered(*cfg_, profile_, pair_j_[k]);
    batch_acc_[k] += ei * ej * (t - last_t_[k]);
    last_t_[k] = t;
  }
}

void KernelEstimate::end_batch(double t) {
  for (size_t k = 0; k < pair_i_.size(); ++k) {
    double ei = centered(*cfg_, profile_, pair_i_[k]);
    double ej = centered(*cfg_, profile_, pair_j_[k]);
    batch_acc_[k] += ei * ej * (t - last_t_[k]);
    last_t_[k] = t;
    batches_[k].push_back(batch_acc_[k]);
    batch_acc_[k] = 0.0;
  }
  batch_len_.push_back(t - batch_t0_);
  total_time_ += t - batch_t0_;
  batch_t0_ = t;
}

void KernelEstimate::accumulate_pairs(const Configuration& c, double dt) {
  for (size_t k = 0; k < pair_i_.size(); ++k) {
    double ei = centered(c, profile_, pair_i_[k]);
    double ej = centered(c, profile_, pair_j_[k]);
    batch_acc_[k] += ei * ej * dt;
  }
  direct_time_ += dt;
}

void KernelEstimate::close_batch_direct() {
  for (size_t k = 0; k < pair_i_.size(); ++k) {
    batches_[k].push_back(batch_acc_[k]);
    batch_acc_[k] = 0.0;
  }
  batch_len_.push_back(direct_time_);
  total_time_ += direct_time_;
  direct_time_ = 0.0;
}

void KernelEstimate::load_reference(const std::function<double(double, double)>& k) {
  for (size_t q = 0; q < pair_i_.size(); ++q) {
    double x = position_of_offset(pair_i_[q]);
    double y = position_of_offset(pair_j_[q]);
    batches_[q].push_back(k(x, y) / params_.N);
    batch_acc_[q] = 0.0;
  }
  batch_len_.push_back(1.0);
  total_time_ += 1.0;
}

double KernelEstimate::k_hat(int pair) const {
  if (total_time_ <= 0.0) throw std::logic_error("KernelEstimate: no time accumulated");
  double s = 0.0;
  for (double b : batches_[static_cast<size_t>(pair)]) s += b;
  return params_.N * s / total_time_;
}

double KernelEstimate::stderr_of(int pair) const {
  size_t nb = batches_[static_cast<size_t>(pair)].size();
  if (nb < 2) return 0.0;
  // batch means of N * (integral / batch length)
  double mean = 0.0;
  std::vector<double> m(nb);
  for (size_t b = 0; b < nb; ++b) {
    m[b] = params_.N * batches_[static_cast<size_t>(pair)][b] / batch_len_[b];
    mean += m[b];
  }
  mean /= static_cast<double>(nb);
  double var = 0.0;
  for (size_t b = 0; b < nb; ++b) var += (m[b] - mean) * (m[b] - mean);
  var /= static_cast<double>(nb - 1);
  return std::sqrt(var / static_cast<double>(nb));
}

Eigen::MatrixXd KernelEstimate::k_hat_matrix() const {
  int n = static_cast<int>(tracked_.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> pos(static_cast<size_t>(params_.sites()), -1);
  for (int u = 0; u < n; ++u) pos[static_cast<size_t>(tracked_[static_cast<size_t>(u)])] = u;
  for (int p = 0; p < n_pairs(); ++p) {
    int u = pos[static_cast<size_t>(pair_i_[static_cast<size_t>(p)])];
    int v = pos[static_cast<size_t>(pair_j_[static_cast<size_t>(p)])];
    double k = k_hat(p);
    K(u, v) = k;
    K(v, u) = k;
  }
  return K;
}

void OccupationEstimate::attach(const Configuration* config, double t0) {
  cfg_ = config;
  t0_ = t0;
  std::fill(last_.begin(), last_.end(), t0);
}

void OccupationEstimate::pre_change(int offset, double t) {
  size_t a = static_cast<size_t>(offset);
  acc_[a] += cfg_->eta[a] * (t - last_[a]);
  last_[a] = t;
}

void OccupationEstimate::finish(double t) {
  for (size_t a = 0; a < acc_.size(); ++a) {
    acc_[a] += cfg_->eta[a] * (t - last_[a]);
    last_[a] = t;
  }
  time_ = t - t0_;
}

namespace {
double interp_field(const Eigen::MatrixXd& F, double spacing, double x, double y) {
  int n = static_cast<int>(F.rows()) - 1;
  double fx = (x + 1.0) / spacing, fy = (y + 1.0) / spacing;
  int a = std::clamp(static_cast<int>(std::floor(fx)), 0, n - 1);
  int b = std::clamp(static_cast<int>(std::floor(fy)), 0, n - 1);
  double tx = fx - a, ty = fy - b;
  return (1 - tx) * (1 - ty) * F(a, b) + tx * (1 - ty) * F(a + 1, b) +
         (1 - tx) * ty * F(a, b + 1) + tx * ty * F(a + 1, b + 1);
}
}  // namespace

double KernelEstimate::position_of_offset(int offset) const {
  return static_cast<double>(params_.site_of(offset)) / params_.N;
}

double KernelEstimate::pairing(const std::function<double(double, double)>& f) const {
  const auto& tr = tracked_;
  size_t n = tr.size();
  if (n < 2) return 0.0;
  // trapezoid weights on the tracked positions
  std::vector<double> w(n), x(n);
  for (size_t u = 0; u < n; ++u) x[u] = position_of_offset(tr[u]);
  for (size_t u = 0; u < n; ++u) {
    double lo = (u == 0) ? x[0] : 0.5 * (x[u - 1] + x[u]);
    double hi = (u + 1 == n) ? x[n - 1] : 0.5 * (x[u] + x[u + 1]);
    w[u] = hi - lo;
  }
  std::vector<int> pos(static_cast<size_t>(params_.sites()), -1);
  for (size_t u = 0; u < n; ++u) pos[static_cast<size_t>(tr[u])] = static_cast<int>(u);

  double acc = 0.0;
  for (int p = 0; p < n_pairs(); ++p) {
    int u = pos[static_cast<size_t>(pair_i_[static_cast<size_t>(p)])];
    int v = pos[static_cast<size_t>(pair_j_[static_cast<size_t>(p)])];
    double kq = k_hat(p);
    acc += w[static_cast<size_t>(u)] * w[static_cast<size_t>(v)] * kq *
           (f(x[static_cast<size_t>(u)], x[static_cast<size_t>(v)]) +
            f(x[static_cast<size_t>(v)], x[static_cast<size_t>(u)]));
  }
  return acc / 4.0;
}

double empirical_pairing(const KernelEstimate& est,
                         const std::function<double(double, double)>& f) {
  return est.pairing(f);
}

double regularity_functional(const KernelEstimate& est, const SymmetricKernel& phi) {
  Eigen::MatrixXd d1 = phi.d1_sym_field();
  double sp = phi.spacing();
  double val = est.pairing(
      [&](double x, double y) { return interp_field(d1, sp, x, y); });
  return val / phi.l2_norm();
}

}  // namespace ssep
