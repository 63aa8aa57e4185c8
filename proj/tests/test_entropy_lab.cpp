#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ssep/entropy_lab.hpp"
#include "ssep/kernel_operator.hpp"
#include "ssep/pde_solvers.hpp"

using namespace ssep;

TEST_CASE("relative entropy") {
  Params p(2, 0.3, 0.7);
  Profile pr = steady_profile(p);
  MeasureVector nu = product_measure_vector(p, pr);
  SUBCASE("vanishes on the diagonal") {
    CHECK(relative_entropy(nu, nu) == doctest::Approx(0.0));
  }
  SUBCASE("point mass") {
    MeasureVector mu{p, std::vector<double>(8, 0.0)};
    mu.probs[3] = 1.0;
    CHECK(relative_entropy(mu, nu) == doctest::Approx(-std::log(nu.probs[3])).epsilon(1e-13));
    MeasureVector zero_somewhere = nu;
    zero_somewhere.probs[3] = 0.0;
    CHECK(std::isinf(relative_entropy(mu, zero_somewhere)));
  }
  SUBCASE("dominates half the squared total variation") {
    Rng rng(4, 0);
    for (int t = 0; t < 50; ++t) {
      MeasureVector mu{p, std::vector<double>(8)};
      double mass = 0;
      for (auto& v : mu.probs) {
        v = std::exp(rng.normal());
        mass += v;
      }
      for (auto& v : mu.probs) v /= mass;
      double l1 = 2.0 * mu.total_variation(nu);
      CHECK(relative_entropy(mu, nu) + 1e-14 >= 0.5 * l1 * l1);
    }
  }
}

TEST_CASE("quadratic form of the jump rates") {
  Params p(2, 0.2, 0.8);
  Profile pr = steady_profile(p);
  GeneratorMatrix gen = build_generator(p, pr);
  MeasureVector nu = product_measure_vector(p, pr);
  SUBCASE("constant densities have zero energy") {
    std::vector<double> ones(8, 1.0);
    CHECK(carre_du_champ(gen, nu, ones) == doctest::Approx(0.0));
  }
  SUBCASE("single-state density against the hand enumeration") {
    // f = 1_{eta*} / nu(eta*); only edges touching eta* contribute
    std::uint64_t star = 0b010;
    std::vector<double> f(8, 0.0);
    f[star] = 1.0 / nu.probs[star];
    double direct = carre_du_champ(gen, nu, f);
    // (1/4)[ nu(star) f(star) sum_out c + f(star) sum_in nu(source) c ]
    double acc = 0.0;
    Configuration cf = config_of_code(star, 3);
    for (int ev = 0; ev < 4; ++ev) {
      double base = ev < 2 ? bulk_rate(cf, ev) : boundary_rate(cf, p, ev == 2 ? -1 : +1);
      acc += nu.probs[star] * base * f[star];
    }
    for (std::uint64_t c = 0; c < 8; ++c) {
      if (c == star) continue;
      Configuration cc = config_of_code(c, 3);
      for (int ev = 0; ev < 4; ++ev) {
        double base = ev < 2 ? bulk_rate(cc, ev) : boundary_rate(cc, p, ev == 2 ? -1 : +1);
        if (base == 0) continue;
        std::uint64_t tgt;
        if (ev < 2)
          tgt = c ^ ((1ull << ev) | (1ull << (ev + 1)));
        else
          tgt = c ^ (1ull << (ev == 2 ? 0 : 2));
        if (tgt == star) acc += nu.probs[c] * base * f[star];
      }
    }
    acc /= 4.0;
    CHECK(direct == doctest::Approx(acc).epsilon(1e-12));
    CHECK(direct > 0.0);
  }
  SUBCASE("biased rates dominate the plain ones up to exp(-2 sup h)") {
    BiasBasis basis = BiasBasis::make(32, 2);
    Eigen::VectorXd c(2);
    c << 1.0, 0.6;
    BiasSpec hs = make_bias_spec(basis, c, 0.3);
    LatticeBias lb = LatticeBias::from_matrix(p, basis.combine_on_lattice(hs.coeffs, p));
    GeneratorMatrix gen_h = build_generator(p, pr, lb);
    Rng rng(7, 0);
    for (int t = 0; t < 10; ++t) {
      std::vector<double> f(8);
      double mass = 0;
      for (std::uint64_t cc = 0; cc < 8; ++cc) {
        f[cc] = std::exp(rng.normal());
        mass += f[cc] * nu.probs[cc];
      }
      for (auto& v : f) v /= mass;
      double lhs = carre_du_champ(gen_h, nu, f);
      double rhs = std::exp(-2.0 * hs.sup_h) * carre_du_champ(gen, nu, f);
      CHECK(lhs + 1e-15 >= rhs);
    }
  }
}

TEST_CASE("adjoint applied to one") {
  Params p(3, 0.2, 0.8);
  Profile pr = steady_profile(p);
  GeneratorMatrix gen = build_generator(p, pr);
  SUBCASE("mean zero under any reference measure") {
    SymmetricKernel g = g_from_k(k0_kernel(48, p.rho_prime()), p);
    GaussianMeasureSpec spec(p, g);
    MeasureVector nu = exact_gaussian_measure(spec);
    std::vector<double> ls = adjoint_one(gen, nu);
    double mean = 0;
    for (std::uint64_t c = 0; c < nu.probs.size(); ++c) mean += nu.probs[c] * ls[c];
    CHECK(std::abs(mean) < 1e-12);
  }
  SUBCASE("vanishes identically at the invariant measure") {
    MeasureVector inv = invariant_measure(gen);
    for (double v : adjoint_one(gen, inv)) CHECK(std::abs(v) < 1e-10);
  }
  SUBCASE("stationarity defect shrinks with N for the matched reference") {
    SymmetricKernel g0 = g_from_k(k0_kernel(120, p.rho_prime()), p);
    double prev = 1e300;
    for (int n : {3, 4, 5, 6}) {
      Params pn(n, 0.2, 0.8);
      Profile prn = steady_profile(pn);
      GeneratorMatrix genn = build_generator(pn, prn);
      GaussianMeasureSpec spec(pn, g0);
      MeasureVector nu = exact_gaussian_measure(spec);
      std::vector<double> ls = adjoint_one(genn, nu);
      double l2 = 0;
      for (std::uint64_t c = 0; c < nu.probs.size(); ++c) l2 += nu.probs[c] * ls[c] * ls[c];
      l2 = std::sqrt(l2);
      CHECK(l2 < prev);
      prev = l2;
    }
  }
}

TEST_CASE("entropy production inequality along the forward equation") {
  Params p(2, 0.2, 0.8);
  Profile pr = steady_profile(p);
  GeneratorMatrix gen = build_generator(p, pr);
  SymmetricKernel g0 = g_from_k(k0_kernel(64, p.rho_prime()), p);
  GaussianMeasureSpec spec(p, g0);
  MeasureVector nu = exact_gaussian_measure(spec);

  std::vector<double> t_grid;
  for (int i = 1; i <= 100; ++i) t_grid.push_back(6.0 * i / 100.0);

  SUBCASE("margin nonnegative at 100 checkpoints") {
    MeasureVector start = product_measure_vector(p, pr);
    auto pts = entropy_production_check(gen, nu, start, t_grid);
    for (const auto& pt : pts) {
      CHECK(pt.margin >= -1e-8);
      CHECK(pt.entropy >= 0.0);
    }
  }
  SUBCASE("stationary start from an invariant reference stays flat") {
    MeasureVector inv = invariant_measure(gen);
    auto pts = entropy_production_check(gen, inv, inv, t_grid);
    for (const auto& pt : pts) {
      CHECK(std::abs(pt.dH_dt) < 1e-10);
      CHECK(pt.entropy < 1e-12);
    }
  }
  SUBCASE("invariant reference makes the entropy monotone") {
    MeasureVector inv = invariant_measure(gen);
    MeasureVector start{p, std::vector<double>(8, 0.02 / 7)};
    start.probs[5] = 0.98;
    auto pts = entropy_production_check(gen, inv, start, t_grid);
    for (size_t i = 1; i < pts.size(); ++i)
      CHECK(pts[i].entropy <= pts[i - 1].entropy + 1e-12);
    // with L*1 = 0 the bound is pure dissipation, hence nonpositive
    for (const auto& pt : pts) CHECK(pt.bound <= 1e-12);
  }
}

TEST_CASE("relaxation experiment") {
  std::vector<double> t_grid;
  for (int i = 1; i <= 30; ++i) t_grid.push_back(60.0 * std::pow(i / 30.0, 2.0));
  SUBCASE("reversible equilibrium relaxes to zero entropy") {
    Params p(3, 0.4, 0.4);
    EntropySeries s = entropy_decay_experiment(p, nullptr, nullptr, t_grid);
    CHECK(s.entropy.front() < 1e-12);  // product measure is already invariant
    CHECK(s.plateau < 1e-12);
  }
  SUBCASE("matched reference lowers the plateau and N improves it") {
    Params pk(8, 0.2, 0.8);
    SymmetricKernel g0 = g_from_k(k0_kernel(120, pk.rho_prime()), pk);
    double prev = 1e300;
    for (int n : {3, 4}) {
      Params p(n, 0.2, 0.8);
      EntropySeries with_g = entropy_decay_experiment(p, &g0, nullptr, t_grid);
      EntropySeries without = entropy_decay_experiment(p, nullptr, nullptr, t_grid);
      CHECK(with_g.plateau < without.plateau);
      CHECK(with_g.plateau < prev);
      prev = with_g.plateau;
      for (double m : with_g.margin) CHECK(m >= -1e-8);
      CHECK(with_g.plateau_settled);
    }
  }
}

TEST_CASE("crude log-Sobolev probe stays finite") {
  Params p(2, 0.2, 0.8);
  Profile pr = steady_profile(p);
  GeneratorMatrix gen = build_generator(p, pr);
  MeasureVector nu = product_measure_vector(p, pr);
  Rng rng(11, 0);
  double c = lsi_constant_estimate(gen, nu, rng);
  CHECK(c > 0.0);
  CHECK(c < 100.0);
}
