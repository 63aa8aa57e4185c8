#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ssep/bias_basis.hpp"
#include "ssep/dynamics.hpp"
#include "ssep/entropy_lab.hpp"
#include "ssep/fields.hpp"

using namespace ssep;

namespace {
Configuration from_bits(std::initializer_list<int> bits) {
  Configuration c;
  for (int b : bits) c.eta.push_back(static_cast<std::uint8_t>(b));
  return c;
}

LatticeBias random_bias(const Params& p, double eps, std::uint64_t seed) {
  BiasBasis basis = BiasBasis::make(48, 3);
  Rng rng(seed, 0);
  Eigen::VectorXd c(3);
  for (int m = 0; m < 3; ++m) c(m) = rng.normal();
  BiasSpec spec = make_bias_spec(basis, c, eps);
  return LatticeBias::from_matrix(p, basis.combine_on_lattice(spec.coeffs, p));
}
}  // namespace

TEST_CASE("plain jump rates") {
  Params p(3, 0.2, 0.8);
  Configuration c = from_bits({1, 0, 0, 1, 1});
  CHECK(bulk_rate(c, 0) == 1.0);   // 1,0
  CHECK(bulk_rate(c, 1) == 0.0);   // 0,0
  CHECK(bulk_rate(c, 2) == 1.0);   // 0,1
  CHECK(bulk_rate(c, 3) == 0.0);   // 1,1
  CHECK(boundary_rate(c, p, -1) == doctest::Approx(1.0 - 0.2));  // occupied left
  CHECK(boundary_rate(c, p, +1) == doctest::Approx(1.0 - 0.8));  // occupied right
  Configuration e = from_bits({0, 0, 0, 0, 0});
  CHECK(boundary_rate(e, p, +1) == doctest::Approx(0.8));
  Params ph(3, 0.5, 0.5);
  CHECK(boundary_rate(c, ph, -1) == doctest::Approx(0.5));
  CHECK(boundary_rate(e, ph, -1) == doctest::Approx(0.5));
}

TEST_CASE("biased exponent equals the brute-force field difference") {
  Params p(3, 0.2, 0.8);
  Profile pr = steady_profile(p);
  LatticeBias bias = random_bias(p, 0.4, 5);
  // single particle at the middle site
  Configuration c = from_bits({0, 0, 1, 0, 0});
  for (int ev = 0; ev < n_events(p.sites()); ++ev) {
    double dpi = delta_pi_of_event(p, pr, bias, c, ev);
    // brute force: apply the event, evaluate Pi before and after
    Configuration after = c;
    if (ev < p.sites() - 1) {
      std::swap(after.eta[static_cast<size_t>(ev)], after.eta[static_cast<size_t>(ev + 1)]);
    } else {
      int a = (ev == p.sites() - 1) ? 0 : p.sites() - 1;
      after.eta[static_cast<size_t>(a)] ^= 1u;
    }
    double brute = pi_field(after, pr, p, bias.H) - pi_field(c, pr, p, bias.H);
    CHECK(dpi == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("rate state maintenance") {
  Params p(6, 0.2, 0.8);
  Profile pr = steady_profile(p);
  SUBCASE("unbiased total rate identity") {
    Rng rng(2, 0);
    RateState st(p, pr, sample_product(pr, rng));
    double expect = 0.0;
    const Configuration& c = st.config();
    for (int e = 0; e < p.sites() - 1; ++e) expect += bulk_rate(c, e);
    expect += boundary_rate(c, p, -1) + boundary_rate(c, p, +1);
    expect *= 0.5 * p.N * p.N;
    CHECK(st.total_rate() == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("incremental bias sums match recomputation under fuzzing") {
    LatticeBias bias = random_bias(p, 0.3, 7);
    Rng rng(3, 0);
    RateState st(p, pr, sample_product(pr, rng), bias);
    NullObserver obs;
    double worst_sum = 0, worst_rate = 0;
    for (int k = 0; k < 5000; ++k) {
      int e = st.sample_event(rng.uniform());
      st.apply_event(e, 0.0, obs);
      if (k % 250 == 0) {
        worst_sum = std::max(
            worst_sum, (st.bond_sums() - st.bond_sums_from_scratch()).cwiseAbs().maxCoeff());
        auto ref = st.rates_from_scratch();
        for (int ev = 0; ev < n_events(p.sites()); ++ev)
          worst_rate = std::max(worst_rate, std::abs(ref[static_cast<size_t>(ev)] - st.rate(ev)));
      }
    }
    CHECK(worst_sum < 1e-10);
    CHECK(worst_rate < 1e-9);
  }
  SUBCASE("swap and swap back restores the bias sums") {
    LatticeBias bias = random_bias(p, 0.3, 11);
    Rng rng(4, 0);
    RateState st(p, pr, sample_product(pr, rng), bias);
    NullObserver obs;
    Eigen::VectorXd before = st.bond_sums();
    int bond = -1;
    for (int e = 0; e < p.sites() - 1; ++e)
      if (st.rate(e) > 0) {
        bond = e;
        break;
      }
    REQUIRE(bond >= 0);
    st.apply_event(bond, 0.0, obs);
    st.apply_event(bond, 0.0, obs);
    CHECK((st.bond_sums() - before).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("unbiased boundary flip only changes rates near the flipped site") {
    Rng rng(8, 0);
    Configuration c = sample_product(pr, rng);
    RateState st(p, pr, c);
    std::vector<double> before(static_cast<size_t>(n_events(p.sites())));
    for (int e = 0; e < n_events(p.sites()); ++e) before[static_cast<size_t>(e)] = st.rate(e);
    NullObserver obs;
    st.apply_event(p.sites(), 0.0, obs);  // right boundary flip
    for (int e = 0; e < n_events(p.sites()); ++e) {
      bool touched = (e == p.sites() - 2) || (e == p.sites());
      if (!touched) CHECK(st.rate(e) == before[static_cast<size_t>(e)]);
    }
  }
}

TEST_CASE("event tree sampling is consistent with the rates") {
  EventTree tree(6);
  std::vector<double> r = {0.5, 0.0, 1.5, 2.0, 0.0, 1.0};
  tree.rebuild(r);
  CHECK(tree.total() == doctest::Approx(5.0));
  CHECK(tree.sample(0.25) == 0);
  CHECK(tree.sample(0.6) == 2);
  CHECK(tree.sample(1.99) == 2);
  CHECK(tree.sample(2.1) == 3);
  CHECK(tree.sample(4.5) == 5);
  tree.set(1, 3.0);
  CHECK(tree.total() == doctest::Approx(8.0));
  CHECK(tree.sample(1.0) == 1);
}

TEST_CASE("generator construction") {
  Params p(2, 0.2, 0.8);
  Profile pr = steady_profile(p);
  GeneratorMatrix gen = build_generator(p, pr);
  SUBCASE("at most 4 transitions per state at N=2") {
    for (std::uint64_t c = 0; c < gen.states(); ++c) {
      int nz = 0;
      for (int e = 0; e < gen.events; ++e)
        if (gen.rate[c * static_cast<size_t>(gen.events) + static_cast<size_t>(e)] > 0) ++nz;
      CHECK(nz <= 4);
    }
  }
  SUBCASE("row sums vanish by construction of the escape rate") {
    // apply to the constant function: (L 1)(eta) = 0
    std::vector<double> ones(gen.states(), 1.0);
    for (double v : gen.apply_to_function(ones)) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("equilibrium generator is reversible for the product measure") {
    Params pe(3, 0.4, 0.4);
    Profile pre = steady_profile(pe);
    GeneratorMatrix g = build_generator(pe, pre);
    MeasureVector nu = product_measure_vector(pe, pre);
    for (std::uint64_t c = 0; c < g.states(); ++c)
      for (int e = 0; e < g.events; ++e) {
        size_t k = c * static_cast<size_t>(g.events) + static_cast<size_t>(e);
        std::uint64_t t = g.target[k];
        if (t == c) continue;
        double fwd = nu.probs[c] * g.rate[k];
        // find the reverse rate
        double bwd = 0;
        for (int e2 = 0; e2 < g.events; ++e2) {
          size_t k2 = t * static_cast<size_t>(g.events) + static_cast<size_t>(e2);
          if (g.target[k2] == c) bwd += g.rate[k2] * nu.probs[t];
        }
        CHECK(fwd == doctest::Approx(bwd).epsilon(1e-12));
      }
  }
}

TEST_CASE("invariant measure") {
  SUBCASE("equilibrium gives the product measure exactly") {
    Params p(3, 0.35, 0.35);
    Profile pr = steady_profile(p);
    MeasureVector mu = invariant_measure(build_generator(p, pr));
    MeasureVector prod = product_measure_vector(p, pr);
    CHECK(mu.total_variation(prod) < 1e-13);
  }
  SUBCASE("profile is linear at every N") {
    Params p(2, 0.2, 0.8);
    Profile pr = steady_profile(p);
    MeasureVector mu = invariant_measure(build_generator(p, pr));
    for (int a = 0; a < p.sites(); ++a) {
      double m = 0;
      for (std::uint64_t c = 0; c < mu.probs.size(); ++c)
        m += mu.probs[c] * ((c >> a) & 1u);
      CHECK(std::abs(m - pr.rho_bar[static_cast<size_t>(a)]) < 1e-10);
    }
  }
  SUBCASE("pair correlations are negative out of equilibrium") {
    Params p(3, 0.2, 0.8);
    Profile pr = steady_profile(p);
    MeasureVector mu = invariant_measure(build_generator(p, pr));
    for (int i = -2; i <= 1; ++i)
      for (int j = i + 1; j <= 2; ++j)
        CHECK(p.N * npoint_correlation(mu, pr, {i, j}) < 0.0);
  }
}

TEST_CASE("forward-equation integrator") {
  Params p(3, 0.2, 0.8);
  Profile pr = steady_profile(p);
  GeneratorMatrix gen = build_generator(p, pr);
  MeasureVector start = product_measure_vector(p, pr);
  auto out = evolve_master(gen, start, {0.0, 0.2, 1.0, 12.0});
  CHECK(out[0].total_variation(start) < 1e-13);
  MeasureVector inv = invariant_measure(gen);
  CHECK(out[3].total_variation(inv) < 1e-8);
  for (const auto& snap : out) {
    double mass = 0, min_p = 1;
    for (double v : snap.probs) {
      mass += v;
      min_p = std::min(min_p, v);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(min_p > -1e-12);
  }
}

TEST_CASE("kinetic Monte Carlo agrees with the exact stack") {
  SUBCASE("frozen-state holding time has mean 1/total rate") {
    Params p(4, 0.2, 0.8);
    Profile pr = steady_profile(p);
    Rng rng(6, 0);
    RateState st(p, pr, sample_product(pr, rng));
    double r = st.total_rate();
    int n = 200000;
    double acc = 0;
    for (int s = 0; s < n; ++s) acc += rng.exponential() / r;
    CHECK(std::abs(acc / n - 1.0 / r) < 4.0 / (r * std::sqrt(n)));
  }
  SUBCASE("equilibrium occupation matches the flat density") {
    Params p(8, 0.45, 0.45);
    Profile pr = steady_profile(p);
    Rng rng(10, 0);
    RateState st(p, pr, sample_product(pr, rng));
    NullObserver burn;
    kmc_run(st, 0.0, 20.0, rng, burn);
    OccupationEstimate occ(p.sites());
    occ.attach(&st.config(), 0.0);
    struct OccOnly {
      OccupationEstimate& o;
      void hold(const Configuration&, double, double) {}
      void pre_change(int a, double t) { o.pre_change(a, t); }
    } obs{occ};
    double T = 600.0;
    kmc_run(st, 0.0, T, rng, obs);
    occ.finish(T);
    for (int a = 0; a < p.sites(); ++a)
      CHECK(std::abs(occ.mean(a) - 0.45) < 0.02);
  }
  SUBCASE("driven occupation relaxes to the linear profile") {
    Params p(8, 0.2, 0.8);
    Profile pr = steady_profile(p);
    Rng rng(14, 0);
    RateState st(p, pr, sample_product(pr, rng));
    NullObserver burn;
    kmc_run(st, 0.0, 20.0, rng, burn);
    OccupationEstimate occ(p.sites());
    occ.attach(&st.config(), 0.0);
    struct OccOnly {
      OccupationEstimate& o;
      void hold(const Configuration&, double, double) {}
      void pre_change(int a, double t) { o.pre_change(a, t); }
    } obs{occ};
    double T = 600.0;
    kmc_run(st, 0.0, T, rng, obs);
    occ.finish(T);
    for (int a = 0; a < p.sites(); ++a)
      CHECK(std::abs(occ.mean(a) - pr.rho_bar[static_cast<size_t>(a)]) < 0.02);
  }
  SUBCASE("state occupation fractions match the invariant measure at N=2") {
    Params p(2, 0.2, 0.8);
    Profile pr = steady_profile(p);
    Rng rng(31, 0);
    RateState st(p, pr, sample_product(pr, rng));
    struct StateTime {
      std::vector<double> acc;
      void hold(const Configuration& c, double, double dt) {
        acc[code_of_config(c)] += dt;
      }
      void pre_change(int, double) {}
    } obs{std::vector<double>(8, 0.0)};
    NullObserver burn;
    kmc_run(st, 0.0, 50.0, rng, burn);
    double T = 3000.0;
    kmc_run(st, 0.0, T, rng, obs);
    MeasureVector inv = invariant_measure(build_generator(p, pr));
    for (int c = 0; c < 8; ++c)
      CHECK(std::abs(obs.acc[static_cast<size_t>(c)] / T - inv.probs[static_cast<size_t>(c)]) <
            0.02);
  }
}

TEST_CASE("pathwise density of the tilted law") {
  Params p(2, 0.2, 0.8);
  Profile pr = steady_profile(p);
  SUBCASE("zero bias gives log density zero") {
    Eigen::MatrixXd H0 = Eigen::MatrixXd::Zero(p.sites(), p.sites());
    LatticeBias lb = LatticeBias::from_matrix(p, H0);
    Rng rng(3, 0);
    RateState st(p, pr, sample_product(pr, rng));
    LoggingObserver log(p);
    kmc_run(st, 0.0, 1.0, rng, log);
    CHECK(log_rn_derivative(log.log(), p, pr, lb) == doctest::Approx(0.0));
  }
  SUBCASE("two-segment trajectory matches a hand computation") {
    // explicit kernel on the 3-site lattice
    Eigen::MatrixXd H(3, 3);
    H << 0.0, 0.3, -0.2, 0.3, 0.1, 0.4, -0.2, 0.4, 0.0;
    LatticeBias lb = LatticeBias::from_matrix(p, H);
    TrajectoryLog traj;
    traj.codes = {0b101, 0b001};
    traj.holds = {0.25, 0.15};
    traj.t_total = 0.4;

    auto pi_of = [&](std::uint64_t code) {
      double acc = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          if (a == b) continue;
          double ea = ((code >> a) & 1u) - pr.rho_bar[static_cast<size_t>(a)];
          double eb = ((code >> b) & 1u) - pr.rho_bar[static_cast<size_t>(b)];
          acc += ea * eb * H(a, b);
        }
      return acc / (4.0 * p.N);
    };
    auto integrand = [&](std::uint64_t code) {
      Configuration c = config_of_code(code, 3);
      double acc = 0;
      for (int ev = 0; ev < 4; ++ev) {
        double base = ev < 2 ? bulk_rate(c, ev)
                             : boundary_rate(c, p, ev == 2 ? -1 : +1);
        if (base == 0) continue;
        Configuration after = c;
        if (ev < 2)
          std::swap(after.eta[static_cast<size_t>(ev)], after.eta[static_cast<size_t>(ev + 1)]);
        else
          after.eta[static_cast<size_t>(ev == 2 ? 0 : 2)] ^= 1u;
        acc += 0.5 * p.N * p.N * base *
               (std::exp(pi_of(code_of_config(after)) - pi_of(code)) - 1.0);
      }
      return acc;
    };
    double expected = pi_of(0b001) - pi_of(0b101) -
                      (integrand(0b101) * 0.25 + integrand(0b001) * 0.15);
    CHECK(log_rn_derivative(traj, p, pr, lb) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("exponential of the log density is a mean-one martingale") {
    Params p3(3, 0.2, 0.8);
    Profile pr3 = steady_profile(p3);
    BiasBasis basis = BiasBasis::make(48, 2);
    Eigen::VectorXd c(2);
    c << 1.0, -0.5;
    BiasSpec hs = make_bias_spec(basis, c, 0.4);
    LatticeBias lb = LatticeBias::from_matrix(p3, basis.combine_on_lattice(hs.coeffs, p3));
    Rng rng(17, 0);
    double acc = 0, acc2 = 0;
    int n = 8000;
    for (int r = 0; r < n; ++r) {
      RateState st(p3, pr3, sample_product(pr3, rng));
      LoggingObserver log(p3);
      kmc_run(st, 0.0, 0.3, rng, log);
      double v = std::exp(log_rn_derivative(log.log(), p3, pr3, lb));
      acc += v;
      acc2 += v * v;
    }
    double mean = acc / n;
    double se = std::sqrt((acc2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) < 4.0 * se);
  }
}
