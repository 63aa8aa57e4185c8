#include "ssep/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssep {

double MeasureVector::expectation(const std::vector<double>& f) const {
  double s = 0.0;
  for (std::uint64_t c = 0; c < probs.size(); ++c) s += probs[c] * f[c];
  return s;
}

bool MeasureVector::strictly_positive() const {
  return std::all_of(probs.begin(), probs.end(), [](double p) { return p > 0.0; });
}

double MeasureVector::total_variation(const MeasureVector& other) const {
  double s = 0.0;
  for (std::uint64_t c = 0; c < probs.size(); ++c) s += std::abs(probs[c] - other.probs[c]);
  return 0.5 * s;
}

int enumeration_site_count(const Params& p) {
  if (p.N > 7)
    throw std::invalid_argument("exact enumeration limited to N <= 7 (state space 2^13)");
  return p.sites();
}

MeasureVector product_measure_vector(const Params& params, const Profile& profile) {
  int S = enumeration_site_count(params);
  MeasureVector mu{params, {}};
  mu.probs.resize(1ull << S);
  for (std::uint64_t c = 0; c < mu.probs.size(); ++c) {
    double w = 1.0;
    for (int a = 0; a < S; ++a) {
      double r = profile.rho_bar[static_cast<size_t>(a)];
      w *= ((c >> a) & 1u) ? r : (1.0 - r);
    }
    mu.probs[c] = w;
  }
  return mu;
}

GaussianMeasureSpec::GaussianMeasureSpec(const Params& p, const SymmetricKernel& g)
    : params(p), profile(steady_profile(p)) {
  int S = p.sites();
  g_lattice.resize(S, S);
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b)
      g_lattice(a, b) = g.eval(static_cast<double>(p.site_of(a)) / p.N,
                               static_cast<double>(p.site_of(b)) / p.N);
}

GaussianMeasureSpec::GaussianMeasureSpec(const Params& p, Eigen::MatrixXd g_lattice_values)
    : params(p), profile(steady_profile(p)), g_lattice(std::move(g_lattice_values)) {
  if (g_lattice.rows() != p.sites() || g_lattice.cols() != p.sites())
    throw std::invalid_argument("GaussianMeasureSpec: lattice kernel size mismatch");
  if ((g_lattice - g_lattice.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("GaussianMeasureSpec: kernel must be symmetric");
}

namespace {
double two_pi_of_g(const GaussianMeasureSpec& spec, std::uint64_t code) {
  int S = spec.params.sites();
  double acc = 0.0;
  // (1/2N) sum_{i != j} = (1/N) sum_{i < j}
  for (int a = 0; a < S; ++a) {
    double ea = ((code >> a) & 1u) - spec.profile.rho_bar[static_cast<size_t>(a)];
    for (int b = a + 1; b < S; ++b) {
      double eb = ((code >> b) & 1u) - spec.profile.rho_bar[static_cast<size_t>(b)];
      acc += ea * eb * spec.g_lattice(a, b);
    }
  }
  return acc / spec.params.N;
}

MeasureVector gaussian_measure_impl(GaussianMeasureSpec& spec, bool parallel) {
  int S = enumeration_site_count(spec.params);
  MeasureVector nu{spec.params, {}};
  std::uint64_t n = 1ull << S;
  nu.probs.resize(n);
  MeasureVector base = product_measure_vector(spec.params, spec.profile);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < static_cast<long long>(n); ++c)
      nu.probs[static_cast<std::uint64_t>(c)] =
          base.probs[static_cast<std::uint64_t>(c)] *
          std::exp(two_pi_of_g(spec, static_cast<std::uint64_t>(c)));
  } else {
    for (std::uint64_t c = 0; c < n; ++c)
      nu.probs[c] = base.probs[c] * std::exp(two_pi_of_g(spec, c));
  }
  double z = 0.0;
  for (double p : nu.probs) z += p;
  for (double& p : nu.probs) p /= z;
  spec.log_partition = std::log(z);
  return nu;
}
}  // namespace

MeasureVector exact_gaussian_measure(GaussianMeasureSpec& spec) {
  return gaussian_measure_impl(spec, true);
}
MeasureVector exact_gaussian_measure_serial(GaussianMeasureSpec& spec) {
  return gaussian_measure_impl(spec, false);
}

GlauberChain::GlauberChain(const GaussianMeasureSpec& spec, std::uint64_t seed,
                           std::uint64_t stream)
    : spec_(spec), rng_(seed, stream) {
  config_ = sample_product(spec.profile, rng_);
  int S = spec.params.sites();
  local_sum_.assign(static_cast<size_t>(S), 0.0);
  for (int a = 0; a < S; ++a) {
    double s = 0.0;
    for (int j = 0; j < S; ++j)
      if (j != a) s += centered(config_, spec_.profile, j) * spec_.g_lattice(a, j);
    local_sum_[static_cast<size_t>(a)] = s;
  }
}

double GlauberChain::acceptance_ratio(int a) const {
  double rho = spec_.profile.rho_bar[static_cast<size_t>(a)];
  int e = config_.eta[static_cast<size_t>(a)];
  double sign = 1.0 - 2.0 * e;
  double bern = std::pow(rho / (1.0 - rho), sign);
  return bern * std::exp(sign * local_sum_[static_cast<size_t>(a)] / spec_.params.N);
}

double GlauberChain::transition_probability(int a) const {
  int S = spec_.params.sites();
  return std::min(1.0, acceptance_ratio(a)) / S;
}

void GlauberChain::flip(int a) {
  double delta = config_.eta[static_cast<size_t>(a)] ? -1.0 : 1.0;
  config_.eta[static_cast<size_t>(a)] ^= 1u;
  int S = spec_.params.sites();
  for (int j = 0; j < S; ++j)
    if (j != a) local_sum_[static_cast<size_t>(j)] += delta * spec_.g_lattice(j, a);
}

void GlauberChain::sweep() {
  int S = spec_.params.sites();
  for (int k = 0; k < S; ++k) {
    int a = static_cast<int>(rng_.below(static_cast<std::uint64_t>(S)));
    double r = acceptance_ratio(a);
    if (r >= 1.0 || rng_.uniform() < r) flip(a);
  }
}

void GlauberChain::burn_in(int sweeps) {
  for (int s = 0; s < sweeps; ++s) sweep();
}

const Configuration& GlauberChain::sample(int thin_sweeps) {
  for (int s = 0; s < thin_sweeps; ++s) sweep();
  return config_;
}

double npoint_correlation(const MeasureVector& mu, const Profile& profile,
                          const std::vector<int>& sites) {
  std::vector<int> offs;
  for (int i : sites) offs.push_back(mu.params.offset_of(i));
  for (size_t a = 0; a < offs.size(); ++a)
    for (size_t b = a + 1; b < offs.size(); ++b)
      if (offs[a] == offs[b]) throw std::invalid_argument("npoint: duplicate sites");
  double s = 0.0;
  for (std::uint64_t c = 0; c < mu.probs.size(); ++c) {
    double prod = 1.0;
    for (int a : offs)
      prod *= ((c >> a) & 1u) - profile.rho_bar[static_cast<size_t>(a)];
    s += mu.probs[c] * prod;
  }
  return s;
}

McEstimate npoint_correlation_mc(GlauberChain& chain, const Profile& profile,
                                 const std::vector<int>& sites, int n_samples,
                                 int n_batches) {
  std::vector<int> offs;
  for (int i : sites) offs.push_back(i + profile.N - 1);
  std::vector<double> batch_sum(static_cast<size_t>(n_batches), 0.0);
  std::vector<int> batch_cnt(static_cast<size_t>(n_batches), 0);
  for (int s = 0; s < n_samples; ++s) {
    const Configuration& c = chain.sample();
    double prod = 1.0;
    for (int a : offs) prod *= centered(c, profile, a);
    int b = s * n_batches / n_samples;
    batch_sum[static_cast<size_t>(b)] += prod;
    batch_cnt[static_cast<size_t>(b)] += 1;
  }
  double mean = 0.0;
  for (int b = 0; b < n_batches; ++b) mean += batch_sum[static_cast<size_t>(b)];
  mean /= n_samples;
  double var = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    double m = batch_sum[static_cast<size_t>(b)] / batch_cnt[static_cast<size_t>(b)];
    var += (m - mean) * (m - mean);
  }
  var /= (n_batches - 1);
  return {mean, std::sqrt(var / n_batches)};
}

double CorrelationTensorSpec::hs_norm() const {
  if (d == 1) return a1.norm();
  if (const_offdiag) {
    int n = static_cast<int>(a2.rows());
    return std::sqrt(static_cast<double>(n) * (n - 1));
  }
  return a2.norm();
}

double CorrelationTensorSpec::evaluate(const Configuration& c, const Profile& profile) const {
  int S = c.sites();
  auto etac = [&](int a) { return centered(c, profile, a); };
  if (d == 1) {
    double x = 0.0;
    for (int i0 = 0; i0 < S; ++i0) {
      double prod = a1(i0);
      if (prod == 0.0) continue;
      bool in = true;
      for (int j : offsets) {
        int a = i0 + j;
        if (a < 0 || a >= S) { in = false; break; }
        prod *= etac(a);
      }
      if (in) x += prod;
    }
    return x;
  }
  if (const_offdiag) {
    // A = 1 off-diagonal, J = {0}: X = (sum etac)^2 - sum etac^2
    double s1 = 0.0, s2 = 0.0;
    for (int a = 0; a < S; ++a) {
      double e = etac(a);
      s1 += e;
      s2 += e * e;
    }
    return s1 * s1 - s2;
  }
  double x = 0.0;
  for (int i0 = 0; i0 < S; ++i0) {
    double base = 1.0;
    bool in = true;
    for (int j : offsets) {
      int a = i0 + j;
      if (a < 0 || a >= S) { in = false; break; }
      base *= etac(a);
    }
    if (!in) continue;
    for (int i1 = 0; i1 < S; ++i1) {
      double w = a2(i0, i1);
      if (w != 0.0) x += w * base * etac(i1);
    }
  }
  return x;
}

McEstimate concentration_check(const CorrelationTensorSpec& spec, double c,
                               const Params& params, const Profile& profile,
                               int samples, Rng& rng) {
  double hs = spec.hs_norm();
  double invp = 2.0 / spec.d;
  double mean = 0.0, m2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    Configuration cfg = sample_product(profile, rng);
    double x = spec.evaluate(cfg, profile);
    double v = (hs > 0.0) ? std::exp(c * std::pow(std::abs(x), invp) / std::pow(hs, invp))
                          : 1.0;
    double delta = v - mean;
    mean += delta / (s + 1);
    m2 += delta * (v - mean);
  }
  double var = (samples > 1) ? m2 / (samples - 1) : 0.0;
  (void)params;
  return {mean, std::sqrt(var / samples)};
}

}  // namespace ssep
