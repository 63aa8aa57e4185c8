// Experiment runner: six experiment families sharing one config format.
// Outputs CSV data files plus manifest.json / report.json per run.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ssep/entropy_lab.hpp"
#include "ssep/experiments.hpp"
#include "ssep/io_util.hpp"
#include "ssep/kernel_operator.hpp"
#include "ssep/pde_solvers.hpp"
#include "ssep/fields.hpp"
#include "ssep/rates_ldp.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssep;

namespace {

struct RunContext {
  Config cfg;
  fs::path out;
  std::uint64_t seed = 1;
  double t_override = -1.0;
  double burnin_override = -1.0;
  json report;
};

Params params_from(const Config& cfg) {
  return Params(static_cast<int>(cfg.get_int("params", "N", 8)),
                cfg.get_num("params", "rho_minus", 0.2),
                cfg.get_num("params", "rho_plus", 0.8));
}

// bias from [bias]: kind = zero | basis (coeffs against the low-mode basis)
BiasSpec bias_from(const Config& cfg, int M) {
  std::string kind = cfg.get("bias", "kind", "zero");
  if (kind == "zero") return zero_bias(M);
  if (kind == "basis") {
    std::vector<double> cs = cfg.get_list("bias", "coeffs");
    if (cs.empty()) throw std::runtime_error("config: bias.coeffs required for kind=basis");
    BiasBasis basis = BiasBasis::make(M, static_cast<int>(cs.size()));
    Eigen::VectorXd c = Eigen::Map<Eigen::VectorXd>(cs.data(), static_cast<long>(cs.size()));
    double eps = cfg.get_num("bias", "eps", 0.0);
    return eps > 0.0 ? make_bias_spec(basis, c, eps) : bias_from_coeffs(basis, c);
  }
  throw std::runtime_error("config: unknown bias.kind '" + kind + "'");
}

std::optional<LatticeBias> lattice_bias_from(const Config& cfg, const Params& p, int M) {
  std::string kind = cfg.get("bias", "kind", "zero");
  if (kind == "zero") return std::nullopt;
  BiasSpec spec = bias_from(cfg, M);
  BiasBasis basis = BiasBasis::make(M, static_cast<int>(spec.coeffs.size()));
  return LatticeBias::from_matrix(p, basis.combine_on_lattice(spec.coeffs, p));
}

void write_kernel_csv(const fs::path& path, const SymmetricKernel& k,
                      const std::string& what) {
  CsvWriter csv(path.string(),
                what + "; upper triangle x<=y; diag_jump = (d2-d1) value(x,x+), "
                       "dimensionless; x,y in [-1,1]",
                "x,y,value,diag_jump");
  for (int a = 0; a <= k.M(); ++a)
    for (int b = a; b <= k.M(); ++b)
      csv.row({k.x(a), k.x(b), k.at(a, b), a == b ? k.jump()(a) : 0.0});
}

json solve_report_json(const SolveReport& rep) {
  return json{{"converged", rep.converged},
              {"iterations", rep.iterations},
              {"final_step", rep.final_step},
              {"measured_contraction", rep.measured_contraction}};
}

// ---------------------------------------------------------------------------
int run_simulate(RunContext& ctx) {
  Params p = params_from(ctx.cfg);
  Profile profile = steady_profile(p);
  int M = static_cast<int>(ctx.cfg.get_int("grid", "M", 64));

  SimulationSetup setup{p,
                        lattice_bias_from(ctx.cfg, p, M),
                        ctx.t_override > 0 ? ctx.t_override
                                           : ctx.cfg.get_num("simulate", "T", 100.0),
                        ctx.burnin_override >= 0
                            ? ctx.burnin_override
                            : ctx.cfg.get_num("simulate", "burnin", 10.0),
                        static_cast<int>(ctx.cfg.get_int("simulate", "stride", 1)),
                        static_cast<int>(ctx.cfg.get_int("simulate", "batches", 32)),
                        ctx.seed};

  // per-batch field series against a reference pair test function
  SymmetricKernel series_phi = SymmetricKernel::from_function(
      32, [](double x, double y) { return std::cos(M_PI * x / 2) * std::cos(M_PI * y / 2); });
  CsvWriter series((ctx.out / "series.csv").string(),
                   "per-batch snapshots of the pair and fluctuation fields against "
                   "cos(pi x/2) test functions; macroscopic time",
                   "t,name,value");
  auto on_batch = [&](double t, const Configuration& c) {
    series.row_mixed({CsvWriter::num(t), "pi_field",
                      CsvWriter::num(pi_field(c, profile, p, series_phi))});
    series.row_mixed({CsvWriter::num(t), "y_field",
                      CsvWriter::num(y_field(c, profile, p, [](double x) {
                        return std::cos(M_PI * x / 2);
                      }))});
  };
  SimulationOutput out = run_pair_experiment(setup, profile, {}, on_batch);

  // reference kernel for the report
  std::string ref = ctx.cfg.get("simulate", "reference", "k0");
  SymmetricKernel kref(M);
  if (ref == "k0") {
    kref = k0_kernel(M, p.rho_prime());
  } else if (ref == "kh") {
    TriangleGrid grid(M);
    kref = solve_euler_lagrange(bias_from(ctx.cfg, M), p, grid);
  }

  CsvWriter csv((ctx.out / "khat.csv").string(),
                "time-averaged pair correlations, k_hat = N * avg(etac_i etac_j); "
                "macroscopic time units",
                "x,y,k_hat,stderr");
  double rms = 0.0;
  int n_checked = 0;
  double worst_dev = 0.0;
  for (int q = 0; q < out.pairs.n_pairs(); ++q) {
    double x = out.pairs.position_of_offset(out.pairs.pair_site_i(q));
    double y = out.pairs.position_of_offset(out.pairs.pair_site_j(q));
    double kh = out.pairs.k_hat(q);
    double se = out.pairs.stderr_of(q);
    csv.row({x, y, kh, se});
    if (ref != "none") {
      double dev = kh - kref.eval(x, y);
      rms += dev * dev;
      ++n_checked;
      if (se > 0) worst_dev = std::max(worst_dev, std::abs(dev) / se);
    }
  }
  if (n_checked) rms = std::sqrt(rms / n_checked);

  CsvWriter occ((ctx.out / "occupation.csv").string(),
                "time-averaged occupation per site vs steady profile",
                "x,time_mean,rho_bar");
  for (int a = 0; a < p.sites(); ++a)
    occ.row({static_cast<double>(p.site_of(a)) / p.N, out.occupation.mean(a),
             profile.rho_bar[static_cast<size_t>(a)]});

  ctx.report["rms_vs_reference"] = rms;
  ctx.report["worst_dev_over_stderr"] = worst_dev;
  ctx.report["n_pairs"] = out.pairs.n_pairs();
  ctx.report["T"] = setup.T;
  return 0;
}

// ---------------------------------------------------------------------------
int run_pde(RunContext& ctx) {
  Params p = params_from(ctx.cfg);
  int M = static_cast<int>(ctx.cfg.get_int("grid", "M", 64));
  TriangleGrid grid(M);
  BiasSpec h = bias_from(ctx.cfg, M);

  SolveReport rep_g, rep_k;
  SymmetricKernel gh = solve_main_equation(h, p, grid, 1e-10, &rep_g);
  SymmetricKernel kh = solve_euler_lagrange(h, p, grid, 1e-10, &rep_k);
  SymmetricKernel k_of_g = k_from_g(gh, p);
  double cross = max_diff(kh, k_of_g);

  write_kernel_csv(ctx.out / "gh.csv", gh, "inverse-correlation kernel g_h");
  write_kernel_csv(ctx.out / "kh.csv", kh, "correlation kernel k_h");

  Rng rng(ctx.seed, 7);
  ContractionReport cr = contraction_report(grid, h, p, rng);
  ctx.report["main_equation"] = solve_report_json(rep_g);
  ctx.report["euler_lagrange"] = solve_report_json(rep_k);
  ctx.report["cross_solver_max_diff"] = cross;
  ctx.report["k0_max_diff"] = max_diff(kh, k0_kernel(M, p.rho_prime()));
  ctx.report["contraction"] = json{{"alpha", cr.alpha},
                                   {"grid_gap", cr.grid_gap},
                                   {"poisson_measured", cr.poisson_measured},
                                   {"poisson_bound", cr.poisson_bound},
                                   {"el_measured", cr.el_measured},
                                   {"el_bound", cr.el_bound}};
  return 0;
}

// ---------------------------------------------------------------------------
int run_rate(RunContext& ctx) {
  Params p = params_from(ctx.cfg);
  int M = static_cast<int>(ctx.cfg.get_int("grid", "M", 64));
  int P = static_cast<int>(ctx.cfg.get_int("bias", "P", 6));
  TriangleGrid grid(M);
  BiasSpec h = bias_from(ctx.cfg, M);

  SymmetricKernel kh = solve_euler_lagrange(h, p, grid);
  BiasBasis basis = BiasBasis::make(M, P);
  RateReport rep = rate_sup(kh, basis, p);
  double explicit_value = rate_explicit(kh, h, p);

  json coeffs = json::array();
  for (int m = 0; m < rep.optimizer.size(); ++m) coeffs.push_back(rep.optimizer(m));
  ctx.report["rate_value"] = rep.value;
  ctx.report["rate_explicit"] = explicit_value;
  ctx.report["optimizer"] = coeffs;
  ctx.report["hessian_condition"] = rep.hessian_condition;
  ctx.report["optimizer_sup_h"] = rep.optimizer_sup_h;
  ctx.report["optimizer_sup_d1h"] = rep.optimizer_sup_d1h;
  ctx.report["J_terms"] = json{{"pi", rep.terms_at_optimum.pi_term},
                               {"trace", rep.terms_at_optimum.trace_term},
                               {"diagonal", rep.terms_at_optimum.diag_term},
                               {"gradient", rep.terms_at_optimum.grad_term}};
  if (h.coeffs.size() == rep.optimizer.size()) {
    double dev = (h.coeffs - rep.optimizer).cwiseAbs().maxCoeff();
    ctx.report["coefficient_recovery_max_dev"] = dev;
  }
  return 0;
}

// ---------------------------------------------------------------------------
int run_dv(RunContext& ctx) {
  Rng rng(ctx.seed, 11);

  // reversible oracle at N = 2
  {
    Params p2(2, 0.5, 0.5);
    Profile pr = steady_profile(p2);
    GeneratorMatrix gen = build_generator(p2, pr);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      MeasureVector mu{p2, std::vector<double>(8)};
      double mass = 0.0;
      for (auto& v : mu.probs) {
        v = std::exp(rng.normal());
        mass += v;
      }
      for (auto& v : mu.probs) v /= mass;
      double rev = dv_reversible(mu, p2);
      double var = dv_variational(mu, gen, rng);
      worst = std::max(worst, std::abs(rev - var));
    }
    ctx.report["dv_reversible_vs_variational_worst"] = worst;
  }

  // density scale separation
  double amp = ctx.cfg.get_num("dv", "bump_amplitude", 0.2);
  double rho = ctx.cfg.get_num("dv", "rho", 0.5);
  auto rho_hat = [amp, rho](double x) {
    double u = x / 0.8;
    return (std::abs(u) < 1.0) ? rho + amp * std::exp(-1.0 / (1.0 - u * u)) : rho;
  };
  std::vector<double> ns = ctx.cfg.get_list("dv", "N_list");
  if (ns.empty()) ns = {50, 100, 200, 400};
  CsvWriter csv((ctx.out / "density_dv.csv").string(),
                "occupation-measure rate of a fixed density bump: exact chain sum vs "
                "continuum (N/8) int sigma |grad lambda|^2, both divided by N",
                "N,exact_over_N,continuum_over_N,ratio");
  json rows = json::array();
  for (double nn : ns) {
    Params p(static_cast<int>(nn), rho, rho);
    double ex = density_dv(rho_hat, p, DvMode::ExactN) / p.N;
    double co = density_dv(rho_hat, p, DvMode::Continuum) / p.N;
    csv.row({nn, ex, co, ex / co});
    rows.push_back(json{{"N", nn}, {"exact_over_N", ex}, {"continuum_over_N", co}});
  }
  ctx.report["density_dv"] = rows;
  return 0;
}

// ---------------------------------------------------------------------------
int run_entropy(RunContext& ctx) {
  std::vector<double> ns = ctx.cfg.get_list("entropy", "N_list");
  if (ns.empty()) ns = {3, 4, 5};
  double rm = ctx.cfg.get_num("params", "rho_minus", 0.2);
  double rp = ctx.cfg.get_num("params", "rho_plus", 0.8);
  double t_max = ctx.cfg.get_num("entropy", "t_max", 24.0);
  int n_times = static_cast<int>(ctx.cfg.get_int("entropy", "n_times", 48));
  bool use_g0 = ctx.cfg.get_int("entropy", "use_g0", 1) != 0;

  std::vector<double> t_grid;
  for (int i = 1; i <= n_times; ++i)
    t_grid.push_back(t_max * std::pow(static_cast<double>(i) / n_times, 2.0));

  SymmetricKernel g0(120);
  if (use_g0) {
    Params pk(8, rm, rp);
    g0 = g_from_k(k0_kernel(120, pk.rho_prime()), pk);
  }

  CsvWriter csv((ctx.out / "entropy.csv").string(),
                "relative entropy of the relaxing law against the reference measure; "
                "macroscopic time",
                "N,t,H,production_bound,margin");
  json summary = json::array();
  for (double nn : ns) {
    Params p(static_cast<int>(nn), rm, rp);
    EntropySeries s =
        entropy_decay_experiment(p, use_g0 ? &g0 : nullptr, nullptr, t_grid);
    for (size_t i = 0; i < s.times.size(); ++i)
      csv.row({nn, s.times[i], s.entropy[i], s.bound[i], s.margin[i]});
    summary.push_back(json{{"N", nn},
                           {"plateau", s.plateau},
                           {"plateau_settled", s.plateau_settled},
                           {"decay_rate", s.decay_rate}});
  }
  ctx.report["series"] = summary;

  // crude LSI diagnostic at tiny N
  json lsi = json::array();
  Rng rng(ctx.seed, 3);
  for (int nn : {2, 3}) {
    Params p(nn, rm, rp);
    Profile pr = steady_profile(p);
    GeneratorMatrix gen = build_generator(p, pr);
    MeasureVector nu = product_measure_vector(p, pr);
    lsi.push_back(json{{"N", nn}, {"C_LS", lsi_constant_estimate(gen, nu, rng)}});
  }
  ctx.report["lsi_probe"] = lsi;
  return 0;
}

// ---------------------------------------------------------------------------
int run_measure(RunContext& ctx) {
  std::vector<double> ns = ctx.cfg.get_list("measure", "N_list");
  if (ns.empty()) ns = {2, 3, 4, 5};
  double rm = ctx.cfg.get_num("params", "rho_minus", 0.2);
  double rp = ctx.cfg.get_num("params", "rho_plus", 0.8);
  double amp = ctx.cfg.get_num("measure", "kernel_amplitude", 0.6);

  SymmetricKernel gtest = SymmetricKernel::from_function(96, [amp](double x, double y) {
    double lo = std::min(x, y), hi = std::max(x, y);
    return -amp * 0.5 * (1.0 + lo) * (1.0 - hi);
  });

  CsvWriter csv((ctx.out / "correlations.csv").string(),
                "n-point centred correlations under the reweighted product measure; "
                "sites given as lattice indices",
                "n,site1,site2,site3,value,stderr,method");
  json rows = json::array();
  for (double nn : ns) {
    Params p(static_cast<int>(nn), rm, rp);
    Profile pr = steady_profile(p);
    GaussianMeasureSpec spec(p, gtest);
    MeasureVector nu = exact_gaussian_measure(spec);
    double logz = spec.log_partition.value();
    double gsup = gtest.sup_norm();
    std::vector<int> s2 = {0, 1};
    std::vector<int> s3 = {-1, 0, 1};
    double c2 = npoint_correlation(nu, pr, s2);
    double c3 = npoint_correlation(nu, pr, s3);
    csv.row_mixed({CsvWriter::num(2), CsvWriter::num(0), CsvWriter::num(1), "",
                   CsvWriter::num(c2), CsvWriter::num(0), "exact"});
    csv.row_mixed({CsvWriter::num(3), CsvWriter::num(-1), CsvWriter::num(0),
                   CsvWriter::num(1), CsvWriter::num(c3), CsvWriter::num(0), "exact"});
    rows.push_back(json{{"N", nn},
                        {"log_Z", logz},
                        {"log_Z_bound", gsup},
                        {"two_point", c2},
                        {"three_point", c3}});
  }
  ctx.report["enumeration"] = rows;

  // concentration statistic with c calibrated at N = 64
  double c_cal = ctx.cfg.get_num("measure", "concentration_c", 0.0);
  int samples = static_cast<int>(ctx.cfg.get_int("measure", "samples", 20000));
  Rng rng(ctx.seed, 5);
  auto statistic = [&](int nn, double c) {
    Params p(nn, rm, rp);
    Profile pr = steady_profile(p);
    CorrelationTensorSpec spec;
    spec.d = 2;
    spec.offsets = {0};
    spec.const_offdiag = true;
    spec.a2 = Eigen::MatrixXd::Zero(p.sites(), p.sites());
    return concentration_check(spec, c, p, pr, samples, rng);
  };
  if (c_cal <= 0.0) {
    c_cal = 0.4;
    while (c_cal > 1e-4 && statistic(64, c_cal).value > 1.6) c_cal /= 2.0;
  }
  McEstimate big = statistic(256, c_cal);
  ctx.report["concentration"] =
      json{{"c", c_cal}, {"statistic_N256", big.value}, {"stderr", big.stderr_}};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary-driven exclusion-process laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--seed", seed, "64-bit RNG seed (overrides config)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "OpenMP thread cap");
  double t_override = -1.0, burnin_override = -1.0;
  app.add_option("--T", t_override, "simulated macroscopic time (overrides config)");
  app.add_option("--burnin-T", burnin_override, "burn-in time (overrides config)");

  auto* sim = app.add_subcommand("simulate", "jump-chain runs and pair correlations");
  auto* pde = app.add_subcommand("pde", "kernel equations on the triangle grid");
  auto* rate = app.add_subcommand("rate", "rate-functional evaluation");
  auto* dv = app.add_subcommand("dv", "occupation-measure rate functionals");
  auto* ent = app.add_subcommand("entropy", "relative entropy relaxation bench");
  auto* mea = app.add_subcommand("measure", "reweighted product-measure suite");

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    RunContext ctx;
    ctx.cfg = Config::parse_file(config_path);
    ctx.out = out_dir;
    fs::create_directories(ctx.out);
    ctx.seed = seed_set ? seed
                        : static_cast<std::uint64_t>(ctx.cfg.get_int("run", "seed", 1));
    ctx.t_override = t_override;
    ctx.burnin_override = burnin_override;

    auto t0 = std::chrono::steady_clock::now();
    int rc = 1;
    std::string kind;
    if (sim->parsed()) kind = "simulate", rc = run_simulate(ctx);
    if (pde->parsed()) kind = "pde", rc = run_pde(ctx);
    if (rate->parsed()) kind = "rate", rc = run_rate(ctx);
    if (dv->parsed()) kind = "dv", rc = run_dv(ctx);
    if (ent->parsed()) kind = "entropy", rc = run_entropy(ctx);
    if (mea->parsed()) kind = "measure", rc = run_measure(ctx);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest{{"experiment", kind},
                  {"config_hash", fnv1a64(ctx.cfg.canonical_text())},
                  {"seed", ctx.seed},
                  {"version", "0.1.0"},
                  {"wall_time_s", wall}};
    std::ofstream(ctx.out / "manifest.json") << manifest.dump(2) << "\n";
    std::ofstream(ctx.out / "report.json") << ctx.report.dump(2) << "\n";
    std::cout << "wrote " << (ctx.out / "report.json").string() << "\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
