#include "ssep/dynamics.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace ssep {

double bulk_rate(const Configuration& c, int bond) {
  int a = c.eta[static_cast<size_t>(bond)];
  int b = c.eta[static_cast<size_t>(bond + 1)];
  return static_cast<double>(b * (1 - a) + a * (1 - b));
}

double boundary_rate(const Configuration& c, const Params& p, int side) {
  double rho = side < 0 ? p.rho_minus : p.rho_plus;
  int a = side < 0 ? 0 : c.sites() - 1;
  int e = c.eta[static_cast<size_t>(a)];
  return (1.0 - rho) * e + rho * (1 - e);
}

LatticeBias LatticeBias::from_matrix(const Params& p, const Eigen::MatrixXd& H) {
  int S = p.sites();
  if (H.rows() != S || H.cols() != S)
    throw std::invalid_argument("LatticeBias: size mismatch");
  LatticeBias b;
  b.H = H;
  b.D1.resize(S - 1, S);
  for (int e = 0; e < S - 1; ++e)
    for (int j = 0; j < S; ++j) b.D1(e, j) = p.N * (H(e + 1, j) - H(e, j));
  b.d_part.resize(S - 1);
  for (int e = 0; e < S - 1; ++e)
    b.d_part(e) = p.rho_prime() * H(e, e + 1) / (2.0 * p.N);
  return b;
}

double delta_pi_of_event(const Params& p, const Profile& profile,
                         const LatticeBias& bias, const Configuration& c, int event) {
  int S = c.sites();
  if (event < S - 1) {
    int e = event;
    double delta = static_cast<double>(c.eta[static_cast<size_t>(e + 1)]) -
                   static_cast<double>(c.eta[static_cast<size_t>(e)]);
    double s = 0.0;
    for (int j = 0; j < S; ++j)
      if (j != e && j != e + 1) s += centered(c, profile, j) * bias.D1(e, j);
    double ch = s / (2.0 * p.N) + bias.d_part(e);
    return -delta * ch / p.N;
  }
  int a = (event == S - 1) ? 0 : S - 1;
  double s = 0.0;
  for (int j = 0; j < S; ++j)
    if (j != a) s += centered(c, profile, j) * bias.H(a, j);
  return (1.0 - 2.0 * c.eta[static_cast<size_t>(a)]) / (2.0 * p.N) * s;
}

EventTree::EventTree(int leaves) {
  cap_ = 1;
  while (cap_ < leaves) cap_ <<= 1;
  node_.assign(static_cast<size_t>(2 * cap_), 0.0);
}

void EventTree::set(int leaf, double v) {
  int i = cap_ + leaf;
  node_[static_cast<size_t>(i)] = v;
  for (i >>= 1; i >= 1; i >>= 1)
    node_[static_cast<size_t>(i)] =
        node_[static_cast<size_t>(2 * i)] + node_[static_cast<size_t>(2 * i + 1)];
}

void EventTree::rebuild(const std::vector<double>& leaves) {
  for (int l = 0; l < cap_; ++l)
    node_[static_cast<size_t>(cap_ + l)] =
        l < static_cast<int>(leaves.size()) ? leaves[static_cast<size_t>(l)] : 0.0;
  for (int i = cap_ - 1; i >= 1; --i)
    node_[static_cast<size_t>(i)] =
        node_[static_cast<size_t>(2 * i)] + node_[static_cast<size_t>(2 * i + 1)];
}

int EventTree::sample(double u) const {
  int i = 1;
  while (i < cap_) {
    double left = node_[static_cast<size_t>(2 * i)];
    if (u < left) {
      i = 2 * i;
    } else {
      u -= left;
      i = 2 * i + 1;
    }
  }
  return i - cap_;
}

RateState::RateState(const Params& p, const Profile& profile, Configuration init,
                     std::optional<LatticeBias> bias)
    : params_(p), profile_(profile), config_(std::move(init)), bias_(std::move(bias)),
      tree_(n_events(p.sites())), half_n2_(0.5 * p.N * p.N) {
  if (config_.sites() != p.sites())
    throw std::invalid_argument("RateState: configuration size mismatch");
  rates_.assign(static_cast<size_t>(n_events(p.sites())), 0.0);
  resync();
}

double RateState::bias_c(int bond) const {
  if (!bias_) return 0.0;
  return s_(bond) / (2.0 * params_.N) + bias_->d_part(bond);
}

Eigen::VectorXd RateState::bond_sums_from_scratch() const {
  int S = config_.sites();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(S - 1);
  if (!bias_) return s;
  for (int e = 0; e < S - 1; ++e) {
    double acc = 0.0;
    for (int j = 0; j < S; ++j)
      if (j != e && j != e + 1) acc += centered(config_, profile_, j) * bias_->D1(e, j);
    s(e) = acc;
  }
  return s;
}

double RateState::bond_rate_value(int bond) const {
  double c = bulk_rate(config_, bond);
  if (c == 0.0) return 0.0;
  if (!bias_) return half_n2_;
  double delta = static_cast<double>(config_.eta[static_cast<size_t>(bond + 1)]) -
                 static_cast<double>(config_.eta[static_cast<size_t>(bond)]);
  return half_n2_ * std::exp(-delta * bias_c(bond) / params_.N);
}

double RateState::flip_rate_value(int side) const {
  double c = boundary_rate(config_, params_, side);
  if (!bias_) return half_n2_ * c;
  int a = side < 0 ? 0 : config_.sites() - 1;
  double sum = side < 0 ? t_left_ : t_right_;
  double arg = (1.0 - 2.0 * config_.eta[static_cast<size_t>(a)]) / (2.0 * params_.N) * sum;
  return half_n2_ * c * std::exp(arg);
}

std::vector<double> RateState::rates_from_scratch() const {
  int S = config_.sites();
  std::vector<double> r(static_cast<size_t>(n_events(S)), 0.0);
  for (int e = 0; e < S - 1; ++e) {
    double c = bulk_rate(config_, e);
    if (c == 0.0) continue;
    double v = half_n2_;
    if (bias_) v *= std::exp(delta_pi_of_event(params_, profile_, *bias_, config_, e));
    r[static_cast<size_t>(e)] = v;
  }
  for (int side : {-1, +1}) {
    int ev = side < 0 ? S - 1 : S;
    double v = half_n2_ * boundary_rate(config_, params_, side);
    if (bias_) v *= std::exp(delta_pi_of_event(params_, profile_, *bias_, config_, ev));
    r[static_cast<size_t>(ev)] = v;
  }
  return r;
}

void RateState::resync() {
  s_ = bond_sums_from_scratch();
  int S = config_.sites();
  t_left_ = 0.0;
  t_right_ = 0.0;
  if (bias_) {
    for (int j = 1; j < S; ++j) t_left_ += centered(config_, profile_, j) * bias_->H(0, j);
    for (int j = 0; j < S - 1; ++j)
      t_right_ += centered(config_, profile_, j) * bias_->H(S - 1, j);
  }
  refresh_rates_all();
  events_since_sync_ = 0;
}

void RateState::on_site_changed(int offset, double delta_eta) {
  if (!bias_) return;
  int S = config_.sites();
  s_ += delta_eta * bias_->D1.col(offset);
  if (offset - 1 >= 0) s_(offset - 1) -= delta_eta * bias_->D1(offset - 1, offset);
  if (offset <= S - 2) s_(offset) -= delta_eta * bias_->D1(offset, offset);
  if (offset != 0) t_left_ += delta_eta * bias_->H(0, offset);
  if (offset != S - 1) t_right_ += delta_eta * bias_->H(S - 1, offset);
}

void RateState::refresh_rates_all() {
  int S = config_.sites();
  for (int e = 0; e < S - 1; ++e) rates_[static_cast<size_t>(e)] = bond_rate_value(e);
  rates_[static_cast<size_t>(S - 1)] = flip_rate_value(-1);
  rates_[static_cast<size_t>(S)] = flip_rate_value(+1);
  tree_.rebuild(rates_);
}

void RateState::refresh_rates_local(int offset) {
  // unbiased case: only rates of events touching `offset` change
  int S = config_.sites();
  for (int e = offset - 1; e <= offset; ++e) {
    if (e < 0 || e > S - 2) continue;
    double v = bond_rate_value(e);
    rates_[static_cast<size_t>(e)] = v;
    tree_.set(e, v);
  }
  if (offset == 0) {
    double v = flip_rate_value(-1);
    rates_[static_cast<size_t>(S - 1)] = v;
    tree_.set(S - 1, v);
  }
  if (offset == S - 1) {
    double v = flip_rate_value(+1);
    rates_[static_cast<size_t>(S)] = v;
    tree_.set(S, v);
  }
}

void RateState::apply_swap(int bond) {
  auto& ea = config_.eta[static_cast<size_t>(bond)];
  auto& eb = config_.eta[static_cast<size_t>(bond + 1)];
  double da = static_cast<double>(eb) - static_cast<double>(ea);
  std::swap(ea, eb);
  on_site_changed(bond, da);
  on_site_changed(bond + 1, -da);
  if (bias_) {
    refresh_rates_all();
  } else {
    refresh_rates_local(bond);
    refresh_rates_local(bond + 1);
  }
}

void RateState::apply_flip(int offset) {
  auto& e = config_.eta[static_cast<size_t>(offset)];
  double d = e ? -1.0 : 1.0;
  e ^= 1u;
  on_site_changed(offset, d);
  if (bias_) {
    refresh_rates_all();
  } else {
    refresh_rates_local(offset);
  }
}

// ----- exact finite-state machinery -----------------------------------------

GeneratorMatrix build_generator(const Params& p, const Profile& profile,
                                std::optional<LatticeBias> bias) {
  int S = enumeration_site_count(p);
  int E = n_events(S);
  std::uint64_t n = 1ull << S;
  GeneratorMatrix gen{p, E, {}, {}};
  gen.target.resize(n * static_cast<size_t>(E));
  gen.rate.resize(n * static_cast<size_t>(E));
  for (std::uint64_t code = 0; code < n; ++code) {
    Configuration c = config_of_code(code, S);
    for (int ev = 0; ev < E; ++ev) {
      std::uint64_t tgt;
      double r;
      if (ev < S - 1) {
        r = bulk_rate(c, ev);
        std::uint64_t bits = ((code >> ev) & 1u) ^ ((code >> (ev + 1)) & 1u);
        tgt = bits ? code ^ ((1ull << ev) | (1ull << (ev + 1))) : code;
      } else {
        int side = (ev == S - 1) ? -1 : +1;
        int a = side < 0 ? 0 : S - 1;
        r = boundary_rate(c, p, side);
        tgt = code ^ (1ull << a);
      }
      r *= 0.5 * p.N * p.N;
      if (r != 0.0 && bias)
        r *= std::exp(delta_pi_of_event(p, profile, *bias, c, ev));
      gen.target[code * static_cast<size_t>(E) + static_cast<size_t>(ev)] = tgt;
      gen.rate[code * static_cast<size_t>(E) + static_cast<size_t>(ev)] = r;
    }
  }
  return gen;
}

double GeneratorMatrix::escape_rate(std::uint64_t code) const {
  double s = 0.0;
  for (int e = 0; e < events; ++e)
    s += rate[code * static_cast<size_t>(events) + static_cast<size_t>(e)];
  return s;
}

std::vector<double> GeneratorMatrix::apply_to_function(const std::vector<double>& f) const {
  std::uint64_t n = states();
  std::vector<double> out(n, 0.0);
  for (std::uint64_t c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int e = 0; e < events; ++e) {
      size_t k = c * static_cast<size_t>(events) + static_cast<size_t>(e);
      acc += rate[k] * (f[target[k]] - f[c]);
    }
    out[c] = acc;
  }
  return out;
}

void GeneratorMatrix::forward_derivative(const std::vector<double>& pi,
                                         std::vector<double>& out) const {
  std::uint64_t n = states();
  out.assign(n, 0.0);
  for (std::uint64_t c = 0; c < n; ++c) {
    double pc = pi[c];
    for (int e = 0; e < events; ++e) {
      size_t k = c * static_cast<size_t>(events) + static_cast<size_t>(e);
      double flow = rate[k] * pc;
      out[target[k]] += flow;
      out[c] -= flow;
    }
  }
}

MeasureVector invariant_measure(const GeneratorMatrix& gen) {
  std::uint64_t n = gen.states();
  int ni = static_cast<int>(n);
  Eigen::SparseMatrix<double> A(ni, ni);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * static_cast<size_t>(gen.events + 1));
  // rows 0..n-2: (Q^T mu)_row = 0 ; last row: sum mu = 1
  for (std::uint64_t c = 0; c < n; ++c) {
    double esc = gen.escape_rate(c);
    if (c != n - 1) trip.emplace_back(static_cast<int>(c), static_cast<int>(c), -esc);
    for (int e = 0; e < gen.events; ++e) {
      size_t k = c * static_cast<size_t>(gen.events) + static_cast<size_t>(e);
      std::uint64_t t = gen.target[k];
      if (t != n - 1)
        trip.emplace_back(static_cast<int>(t), static_cast<int>(c), gen.rate[k]);
    }
  }
  for (std::uint64_t c = 0; c < n; ++c)
    trip.emplace_back(ni - 1, static_cast<int>(c), 1.0);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("invariant_measure: factorisation failed");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ni);
  b(ni - 1) = 1.0;
  Eigen::VectorXd mu = lu.solve(b);
  mu += lu.solve((b - A * mu).eval());

  MeasureVector out{gen.params, std::vector<double>(mu.data(), mu.data() + ni)};
  // residual || mu^T L ||_inf over all states
  std::vector<double> din;
  gen.forward_derivative(out.probs, din);
  double res = 0.0;
  for (double v : din) res = std::max(res, std::abs(v));
  if (res > 1e-12 * std::max(1.0, gen.escape_rate(0)))
    throw std::runtime_error("invariant_measure: stationarity residual " + std::to_string(res));
  return out;
}

std::vector<MeasureVector> evolve_master(const GeneratorMatrix& gen,
                                         const MeasureVector& initial,
                                         const std::vector<double>& t_grid) {
  // Cash-Karp embedded RK4(5) with PI-free elementary step control
  static const double a2 = 1.0 / 5, a3 = 3.0 / 10, a4 = 3.0 / 5, a5 = 1.0, a6 = 7.0 / 8;
  (void)a2; (void)a3; (void)a4; (void)a5; (void)a6;
  static const double b21 = 1.0 / 5;
  static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static const double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static const double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
  static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                      b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
  static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594,
                      c6 = 512.0 / 1771;
  static const double d1 = 2825.0 / 27648, d3 = 18575.0 / 48384, d4 = 13525.0 / 55296,
                      d5 = 277.0 / 14336, d6 = 1.0 / 4;

  std::uint64_t n = gen.states();
  if (initial.probs.size() != n)
    throw std::invalid_argument("evolve_master: initial size mismatch");
  std::vector<double> y = initial.probs, k1, k2, k3, k4, k5, k6, tmp(n), y5(n), y4(n);
  double t = 0.0;
  double dt = 1e-4;
  const double atol = 1e-12, rtol = 1e-10;

  std::vector<MeasureVector> out;
  for (double tg : t_grid) {
    if (tg < t) throw std::invalid_argument("evolve_master: t_grid must be increasing");
    while (t < tg) {
      double step = std::min(dt, tg - t);
      gen.forward_derivative(y, k1);
      for (std::uint64_t i = 0; i < n; ++i) tmp[i] = y[i] + step * b21 * k1[i];
      gen.forward_derivative(tmp, k2);
      for (std::uint64_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (b31 * k1[i] + b32 * k2[i]);
      gen.forward_derivative(tmp, k3);
      for (std::uint64_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
      gen.forward_derivative(tmp, k4);
      for (std::uint64_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
      gen.forward_derivative(tmp, k5);
      for (std::uint64_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] +
                                b65 * k5[i]);
      gen.forward_derivative(tmp, k6);
      double err = 0.0;
      for (std::uint64_t i = 0; i < n; ++i) {
        y5[i] = y[i] + step * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
        y4[i] = y[i] + step * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                               d6 * k6[i]);
        double sc = atol + rtol * std::abs(y5[i]);
        err = std::max(err, std::abs(y5[i] - y4[i]) / sc);
      }
      if (err <= 1.0) {
        t += step;
        std::swap(y, y5);
      }
      double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
      dt = step * std::min(5.0, std::max(0.2, fac));
      if (dt < 1e-14)
        throw std::runtime_error("evolve_master: step size underflow");
    }
    MeasureVector snap{gen.params, y};
    double mass = 0.0;
    for (double v : snap.probs) mass += v;
    for (double& v : snap.probs) v /= mass;
    out.push_back(std::move(snap));
  }
  return out;
}

double pi_of_code(const Params& p, const Profile& profile, const Eigen::MatrixXd& H,
                  std::uint64_t code) {
  int S = p.sites();
  double acc = 0.0;
  for (int a = 0; a < S; ++a) {
    double ea = ((code >> a) & 1u) - profile.rho_bar[static_cast<size_t>(a)];
    for (int b = a + 1; b < S; ++b) {
      double eb = ((code >> b) & 1u) - profile.rho_bar[static_cast<size_t>(b)];
      acc += ea * eb * H(a, b);
    }
  }
  return acc / (2.0 * p.N);  // (1/4N) * 2 (ordered pairs)
}

double log_rn_derivative(const TrajectoryLog& traj, const Params& p,
                         const Profile& profile, const LatticeBias& h) {
  if (traj.codes.empty()) return 0.0;
  int S = p.sites();
  int E = n_events(S);
  double half_n2 = 0.5 * p.N * p.N;
  double integral = 0.0;
  for (size_t k = 0; k < traj.codes.size(); ++k) {
    Configuration c = config_of_code(traj.codes[k], S);
    double gen_term = 0.0;
    for (int ev = 0; ev < E; ++ev) {
      double base;
      if (ev < S - 1)
        base = bulk_rate(c, ev);
      else
        base = boundary_rate(c, p, ev == S - 1 ? -1 : +1);
      if (base == 0.0) continue;
      double dpi = delta_pi_of_event(p, profile, h, c, ev);
      gen_term += half_n2 * base * std::expm1(dpi);
    }
    integral += gen_term * traj.holds[k];
  }
  double pi_start = pi_of_code(p, profile, h.H, traj.codes.front());
  double pi_end = pi_of_code(p, profile, h.H, traj.codes.back());
  return pi_end - pi_start - integral;
}

}  // namespace ssep
