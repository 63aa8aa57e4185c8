#include "ssep/entropy_lab.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssep {

double relative_entropy(const MeasureVector& mu, const MeasureVector& nu) {
  if (mu.probs.size() != nu.probs.size())
    throw std::invalid_argument("relative_entropy: size mismatch");
  double acc = 0.0;
  for (std::uint64_t c = 0; c < mu.probs.size(); ++c) {
    double m = mu.probs[c];
    if (m <= 0.0) continue;
    double n = nu.probs[c];
    if (n <= 0.0) return std::numeric_limits<double>::infinity();
    acc += m * std::log(m / n);
  }
  return std::max(acc, 0.0);
}

namespace {
double quad_form(const GeneratorMatrix& gen, const MeasureVector& nu,
                 const std::vector<double>& f) {
  std::uint64_t n = gen.states();
  std::vector<double> sf(n);
  for (std::uint64_t c = 0; c < n; ++c) sf[c] = std::sqrt(std::max(f[c], 0.0));
  double acc = 0.0;
  for (std::uint64_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (int e = 0; e < gen.events; ++e) {
      size_t k = c * static_cast<size_t>(gen.events) + static_cast<size_t>(e);
      double d = sf[gen.target[k]] - sf[c];
      s += gen.rate[k] * d * d;
    }
    acc += nu.probs[c] * s;
  }
  return acc;
}
}  // namespace

double dirichlet_form_full(const GeneratorMatrix& gen, const MeasureVector& nu,
                           const std::vector<double>& f) {
  return quad_form(gen, nu, f);
}

double carre_du_champ(const GeneratorMatrix& gen, const MeasureVector& nu,
                      const std::vector<double>& f) {
  double n2 = static_cast<double>(gen.params.N) * gen.params.N;
  return quad_form(gen, nu, f) / (2.0 * n2);
}

std::vector<double> adjoint_one(const GeneratorMatrix& gen, const MeasureVector& nu) {
  std::uint64_t n = gen.states();
  std::vector<double> out(n, 0.0);
  // inflow part: c(eta', eta) nu(eta') / nu(eta)
  for (std::uint64_t c = 0; c < n; ++c) {
    for (int e = 0; e < gen.events; ++e) {
      size_t k = c * static_cast<size_t>(gen.events) + static_cast<size_t>(e);
      std::uint64_t t = gen.target[k];
      if (t == c || gen.rate[k] == 0.0) continue;
      out[t] += gen.rate[k] * nu.probs[c];
    }
  }
  double n2half = 0.5 * gen.params.N * gen.params.N;
  for (std::uint64_t c = 0; c < n; ++c)
    out[c] = (out[c] / nu.probs[c] - gen.escape_rate(c)) / n2half;
  return out;
}

std::vector<ProductionPoint> entropy_production_check(const GeneratorMatrix& gen,
                                                      const MeasureVector& nu,
                                                      const MeasureVector& initial,
                                                      const std::vector<double>& t_grid) {
  std::uint64_t n = gen.states();
  std::vector<MeasureVector> traj = evolve_master(gen, initial, t_grid);
  std::vector<double> lstar = adjoint_one(gen, nu);
  double n2half = 0.5 * gen.params.N * gen.params.N;

  std::vector<ProductionPoint> out;
  std::vector<double> f(n), dpi;
  for (size_t s = 0; s < traj.size(); ++s) {
    const auto& pi = traj[s];
    ProductionPoint pt;
    pt.t = t_grid[s];
    pt.entropy = relative_entropy(pi, nu);
    gen.forward_derivative(pi.probs, dpi);
    double dh = 0.0;
    for (std::uint64_t c = 0; c < n; ++c) {
      double ratio = pi.probs[c] / nu.probs[c];
      if (ratio > 0.0) dh += dpi[c] * std::log(ratio);
    }
    pt.dH_dt = dh;
    for (std::uint64_t c = 0; c < n; ++c) f[c] = pi.probs[c] / nu.probs[c];
    double gamma_full = dirichlet_form_full(gen, nu, f);
    double adj = 0.0;
    for (std::uint64_t c = 0; c < n; ++c) adj += pi.probs[c] * lstar[c];
    pt.bound = -gamma_full + n2half * adj;
    pt.margin = pt.bound - pt.dH_dt;
    out.push_back(pt);
  }
  return out;
}

EntropySeries entropy_decay_experiment(const Params& params, const SymmetricKernel* g,
                                       const Eigen::MatrixXd* h_lattice,
                                       const std::vector<double>& t_grid) {
  Profile profile = steady_profile(params);
  std::optional<LatticeBias> bias;
  if (h_lattice) bias = LatticeBias::from_matrix(params, *h_lattice);
  GeneratorMatrix gen = build_generator(params, profile, bias);

  MeasureVector nu = g ? [&] {
    GaussianMeasureSpec spec(params, *g);
    return exact_gaussian_measure(spec);
  }()
                       : product_measure_vector(params, profile);
  MeasureVector start = product_measure_vector(params, profile);

  std::vector<ProductionPoint> pts = entropy_production_check(gen, nu, start, t_grid);

  EntropySeries series;
  for (const auto& p : pts) {
    series.times.push_back(p.t);
    series.entropy.push_back(p.entropy);
    series.bound.push_back(p.bound);
    series.margin.push_back(p.margin);
  }
  series.plateau = series.entropy.back();

  // settled if H moved < 1% of its final value over the last decade of t
  double t_end = series.times.back();
  double h_ref = series.plateau;
  double h_decade = h_ref;
  for (size_t i = 0; i < series.times.size(); ++i)
    if (series.times[i] >= t_end / 10.0) {
      h_decade = series.entropy[i];
      break;
    }
  series.plateau_settled =
      std::abs(h_decade - h_ref) <= 0.01 * std::max(h_ref, 1e-300);

  // crude exponential fit of H - plateau over the early window
  double h0 = series.entropy.front() - series.plateau;
  std::vector<double> xs, ys;
  for (size_t i = 0; i < series.times.size(); ++i) {
    double d = series.entropy[i] - series.plateau;
    if (d > 0.05 * h0 && d > 1e-14 && series.times[i] > 0.0) {
      xs.push_back(series.times[i]);
      ys.push_back(std::log(d));
    }
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      num += (xs[i] - mx) * (ys[i] - my);
      den += (xs[i] - mx) * (xs[i] - mx);
    }
    if (den > 0) series.decay_rate = -num / den;
  }
  return series;
}

double lsi_constant_estimate(const GeneratorMatrix& gen, const MeasureVector& nu,
                             Rng& rng, int trials) {
  std::uint64_t n = gen.states();
  double n2 = static_cast<double>(gen.params.N) * gen.params.N;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> f(n);
    double mass = 0.0;
    for (std::uint64_t c = 0; c < n; ++c) {
      f[c] = std::exp(1.5 * rng.normal());
      mass += f[c] * nu.probs[c];
    }
    MeasureVector mu{gen.params, std::vector<double>(n)};
    for (std::uint64_t c = 0; c < n; ++c) {
      f[c] /= mass;
      mu.probs[c] = f[c] * nu.probs[c];
    }
    double h = relative_entropy(mu, nu);
    double cdc = carre_du_champ(gen, nu, f);
    if (cdc > 1e-300) worst = std::max(worst, h / (n2 * cdc));
  }
  return worst;
}

}  // namespace ssep
