#include "hom/cli.hpp"

#include "hom/analysis.hpp"
#include "hom/io.hpp"
#include "hom/pipeline.hpp"
#include "hom/selftest.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace hom {

namespace fs = std::filesystem;

namespace {

// Raised while turning flags into configuration; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnalyticArgs {
  double gamma_spon = 1.0;
  double gamma_pure = 0.0;
  double w_p = 0.0;
  double theta = std::numbers::pi / 4.0;
  double mode_match = 1.0;
  double irf_fwhm = 0.0;
  double delta_t = 4.6;
  double range = 0.0;
  double step = 0.0;
  std::string out;
  CLI::Option* gamma_pure_opt = nullptr;
  CLI::Option* w_p_opt = nullptr;
  CLI::Option* range_opt = nullptr;
  CLI::Option* step_opt = nullptr;
};

struct SimulateArgs {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::string pol;
  double theta = 0.0;
  double delta_t = 0.0;
  double gamma_spon = 0.0;
  double gamma_pure = 0.0;
  double w_p = 0.0;
  double mode_match = 0.0;
  double irf_fwhm = 0.0;
  int replicas = 1;
  std::string mode;
  std::string out;
  bool no_timetags = false;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
};

struct AnalyzeArgs {
  std::string par_path;
  std::string orth_path;
  std::string config;
  int bin = 2;
  int diff_bin = 7;
  double gamma_spon = 1.0 / 3.4;
  double irf_fwhm = 0.42;
  double theta = std::numbers::pi / 4.0;
  double fit_window = 2.3;
  double v0_window = 0.0;
  double norm_min = 0.0;
  double norm_max = 0.0;
  double init_gamma_pure = 0.5;
  double init_w_p = 5.0;
  std::uint64_t seed = 1;
  std::string out = "analysis";
  bool flat_baseline = false;
  CLI::Option* gamma_spon_opt = nullptr;
  CLI::Option* irf_opt = nullptr;
  CLI::Option* theta_opt = nullptr;
  CLI::Option* v0_window_opt = nullptr;
  CLI::Option* norm_min_opt = nullptr;
  CLI::Option* norm_max_opt = nullptr;
};

struct SelftestArgs {
  bool quick = false;
  std::uint64_t seed = 1;
  bool inject_fault = false;
};

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
}

template <typename F>
auto as_usage(F&& body) {
  try {
    return body();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

int cmd_analytic(const AnalyticArgs& a, std::ostream& out) {
  EmitterParams p;
  BeamSplitterConfig bs;
  double range = 0.0;
  double step = 0.0;
  as_usage([&] {
    p.gamma_spon = a.gamma_spon;
    if (!(a.gamma_spon > 0.0)) throw InvalidInput("gamma-spon must be > 0");
    p.gamma_pure = a.gamma_pure_opt->count() ? a.gamma_pure : 3.0 * a.gamma_spon;
    p.w_p = a.w_p_opt->count() ? a.w_p : 2.5 * a.gamma_spon;
    p.validate();
    bs.theta = a.theta;
    bs.mode_match = a.mode_match;
    bs.validate();
    range = a.range_opt->count() ? a.range : 0.5 / a.gamma_spon;
    step = a.step_opt->count() ? a.step : 0.005 / a.gamma_spon;
    if (!(range > 0.0) || !(step > 0.0)) throw InvalidInput("tau range and step must be > 0");
    if (!(a.irf_fwhm >= 0.0)) throw InvalidInput("irf-fwhm-ns must be >= 0");
    return 0;
  });

  const auto half = static_cast<Eigen::Index>(std::llround(range / step));
  Eigen::ArrayXd tau(2 * half + 1);
  for (Eigen::Index i = 0; i < tau.size(); ++i) tau[i] = static_cast<double>(i - half) * step;

  std::vector<std::pair<std::string, Eigen::ArrayXd>> columns = {
      {"g1", g1(tau, p)},
      {"g2_source", g2_source(tau, p)},
      {"g2_parallel", g2_34(tau, p, bs, PolarizationMode::parallel)},
      {"g2_orthogonal", g2_34(tau, p, bs, PolarizationMode::orthogonal)},
  };
  if (a.irf_fwhm > 0.0) {
    const FitParameters fp{p.gamma_pure, p.w_p, bs.mode_match, 0.0};
    const ModelCurves m = hom_model(tau, step, fp, p.gamma_spon, bs.theta, a.irf_fwhm, 1);
    columns.emplace_back("g2_parallel_irf", m.parallel);
    columns.emplace_back("g2_orthogonal_irf", m.orthogonal);
  }

  const double par0 = g2_34(0.0, p, bs, PolarizationMode::parallel);
  const double orth0 = g2_34(0.0, p, bs, PolarizationMode::orthogonal);
  const KeyValues meta = {
      {"gamma_spon_per_ns", format_number(p.gamma_spon)},
      {"gamma_pure_per_ns", format_number(p.gamma_pure)},
      {"w_p_per_ns", format_number(p.w_p)},
      {"theta_rad", format_number(bs.theta)},
      {"mode_match", format_number(bs.mode_match)},
      {"irf_fwhm_ns", format_number(a.irf_fwhm)},
      {"T2_ns", format_number(p.t2())},
      {"delta_t_ns", format_number(a.delta_t)},
      {"overlap_sq", format_number(overlap_sq(a.delta_t, p))},
      {"v0_intrinsic", format_number(visibility(orth0, par0))},
  };
  const std::string csv = curves_csv(meta, tau, columns);
  if (a.out.empty()) out << csv;
  else write_text_file(a.out, csv);
  return exit_ok;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = as_usage([&] {
    RunConfig c = a.config.empty() ? experiment_defaults() : read_config(a.config);
    for (const std::string& entry : a.sets) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + entry + "'");
      apply_config_entry(c, entry.substr(0, eq), entry.substr(eq + 1));
    }
    for (const auto& [opt, apply] : a.overrides)
      if (opt->count()) apply(c);
    if (a.no_timetags) c.write_timetags = false;
    c.validate();
    return c;
  });

  const fs::path dir = cfg.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const RunResult run = simulate(cfg, cfg.write_timetags);
  CorrelationHistogram hist = run.histogram;
  try {
    check_norm_region(hist, cfg.norm, cfg.emitter.gamma_spon, cfg.interferometer.delta_t);
  } catch (const InvalidInput& e) {
    err << "warning: " << e.what() << "\n";
  }
  try {
    hist = cfg.detection.mode == HistogramMode::tac ? normalize_start_stop(hist, cfg.norm)
                                                    : normalize(hist, cfg.norm);
  } catch (const InvalidInput& e) {
    err << "warning: histogram left unnormalized: " << e.what() << "\n";
  }

  write_text_file(dir / "config.txt", format_key_values(config_to_key_values(cfg)));
  write_text_file(dir / "histogram.csv", histogram_csv(hist));
  if (cfg.write_timetags) write_text_file(dir / "timetags.csv", timetags_csv(run.events));

  out << "photons = " << run.photons << "\n"
      << "recorded = " << run.recorded << "\n"
      << "labels_conditioned = " << run.labels.conditioned << "\n"
      << "labels_clipped = " << run.labels.clipped << "\n"
      << "largest_cluster = " << run.labels.largest_cluster << "\n"
      << "normalization_constant = " << format_number(hist.normalization_constant) << "\n"
      << "out = " << dir.string() << "\n";
  return exit_ok;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  DetectionConfig det;
  NormRegion region;
  double gamma_spon = a.gamma_spon;
  double theta = a.theta;
  double delta_t = 4.6;
  as_usage([&] {
    if (!a.config.empty()) {
      const RunConfig c = read_config(a.config);
      det = c.detection;
      region = c.norm;
      gamma_spon = c.emitter.gamma_spon;
      theta = c.interferometer.bs.theta;
      delta_t = c.interferometer.delta_t;
    }
    if (a.gamma_spon_opt->count()) gamma_spon = a.gamma_spon;
    if (a.irf_opt->count()) det.irf_fwhm_pair = a.irf_fwhm;
    if (a.theta_opt->count()) theta = a.theta;
    if (a.norm_min_opt->count()) region.abs_min = a.norm_min;
    if (a.norm_max_opt->count()) region.abs_max = a.norm_max;
    if (a.bin < 1 || a.diff_bin < 1) throw InvalidInput("bin factors must be >= 1");
    if (!(gamma_spon > 0.0)) throw InvalidInput("gamma-spon must be > 0");
    return 0;
  });

  const CorrelationHistogram raw_par = read_histogram(a.par_path);
  const CorrelationHistogram raw_orth = read_histogram(a.orth_path);
  if (!raw_par.same_geometry(raw_orth))
    throw IoError("histograms " + a.par_path + " and " + a.orth_path + " differ in bin geometry");
  try {
    check_norm_region(raw_par, region, gamma_spon, delta_t);
  } catch (const InvalidInput& e) {
    err << "warning: " << e.what() << "\n";
  }

  const auto norm = [&](const CorrelationHistogram& h) {
    return a.flat_baseline ? normalize(h, region) : normalize_start_stop(h, region);
  };
  const CorrelationHistogram par = norm(rebin(raw_par, a.bin));
  const CorrelationHistogram orth = norm(rebin(raw_orth, a.bin));
  FitOptions options;
  options.theta = theta;
  options.fit_window = a.fit_window;
  options.seed = a.seed;
  if (a.v0_window_opt->count()) options.v0_window = a.v0_window;
  const FitParameters init{a.init_gamma_pure, a.init_w_p, 0.5, 0.05};
  const HomFitResult fit = fit_hom_model(par, orth, gamma_spon, det, init, options);

  const double window = std::max(options.v0_window.value_or(det.irf_fwhm_pair), par.bin_width);
  const double v0_direct = v0_from_histograms(par, orth, window);
  double dip_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < par.size(); ++i)
    if (std::abs(par.bin_centers[i]) <= window) dip_min = std::min(dip_min, (*par.normalized)[i]);

  const CorrelationHistogram dpar = norm(rebin(raw_par, a.diff_bin));
  const CorrelationHistogram dorth = norm(rebin(raw_orth, a.diff_bin));
  const DifferenceCurve diff = difference_curve(dorth, dpar);

  KeyValues results = fit_results(fit);
  results.emplace_back("v0_direct", format_number(v0_direct));
  results.emplace_back("parallel_dip_min", format_number(dip_min));
  results.emplace_back("coincidences_parallel", std::to_string(raw_par.total()));
  results.emplace_back("coincidences_orthogonal", std::to_string(raw_orth.total()));

  const fs::path dir = a.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "results.txt", format_key_values(results));
  write_text_file(dir / "difference.csv", difference_csv(diff));
  out << format_key_values(results);
  if (!fit.converged) err << "warning: fit did not converge\n";
  if (!fit.physical) err << "warning: fit optimum is non-physical\n";
  return exit_ok;
}

int cmd_selftest(const SelftestArgs& a, std::ostream& out, std::ostream& err) {
  SelftestOptions opt;
  opt.quick = a.quick;
  opt.seed = a.seed;
  opt.inject_fault = a.inject_fault;
  const std::vector<CheckResult> results = run_selftest(opt, &out);
  int failed = 0;
  for (const CheckResult& r : results) {
    if (r.passed) continue;
    ++failed;
    err << "failed: " << r.name << " (" << r.detail << ")\n";
  }
  out << "selftest: " << results.size() - static_cast<std::size_t>(failed) << "/" << results.size()
      << " checks passed\n";
  return failed == 0 ? exit_ok : exit_selftest_failed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-photon interference simulator and analysis toolkit", "homsim"};
  app.require_subcommand(1);

  AnalyticArgs an;
  CLI::App* analytic = app.add_subcommand("analytic", "Write closed-form correlation curves as CSV");
  analytic->add_option("--gamma-spon", an.gamma_spon, "Spontaneous emission rate (1/ns)")->capture_default_str();
  an.gamma_pure_opt = analytic->add_option("--gamma-pure", an.gamma_pure, "Pure dephasing rate (1/ns), default 3 gamma-spon");
  an.w_p_opt = analytic->add_option("--wp", an.w_p, "Pump rate (1/ns), default 2.5 gamma-spon");
  analytic->add_option("--theta", an.theta, "Beam splitter angle (rad)")->capture_default_str();
  analytic->add_option("--mode-match", an.mode_match, "Mode-match factor M")->capture_default_str();
  analytic->add_option("--irf-fwhm-ns", an.irf_fwhm, "Adds IRF-convolved columns when > 0")->capture_default_str();
  analytic->add_option("--delta-t-ns", an.delta_t, "Delay used for the overlap header")->capture_default_str();
  an.range_opt = analytic->add_option("--tau-max-ns", an.range, "Grid half-width, default 0.5/gamma-spon");
  an.step_opt = analytic->add_option("--step-ns", an.step, "Grid step, default 0.005/gamma-spon");
  analytic->add_option("--out", an.out, "Output CSV (stdout when omitted)");

  SimulateArgs sim;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo run producing time tags and a histogram");
  simulate_cmd->add_option("--config", sim.config, "Flat key = value configuration file");
  simulate_cmd->add_option("--set", sim.sets, "Override any configuration key (key=value)");
  auto override_opt = [&](CLI::Option* opt, std::function<void(RunConfig&)> apply) {
    sim.overrides.emplace_back(opt, std::move(apply));
  };
  override_opt(simulate_cmd->add_option("--seed", sim.seed, "Base seed; replica r uses seed + r"),
               [&](RunConfig& c) { c.seed = sim.seed; });
  override_opt(simulate_cmd->add_option("--duration-ns", sim.duration, "Simulated time per replica"),
               [&](RunConfig& c) { c.duration = sim.duration; });
  override_opt(simulate_cmd->add_option("--pol", sim.pol, "parallel | orthogonal"),
               [&](RunConfig& c) { c.interferometer.pol = parse_polarization_mode(sim.pol); });
  override_opt(simulate_cmd->add_option("--theta", sim.theta, "Beam splitter angle (rad)"),
               [&](RunConfig& c) { c.interferometer.bs.theta = sim.theta; });
  override_opt(simulate_cmd->add_option("--delta-t-ns", sim.delta_t, "Arm delay"),
               [&](RunConfig& c) { c.interferometer.delta_t = sim.delta_t; });
  override_opt(simulate_cmd->add_option("--gamma-spon", sim.gamma_spon, "Spontaneous emission rate (1/ns)"),
               [&](RunConfig& c) { c.emitter.gamma_spon = sim.gamma_spon; });
  override_opt(simulate_cmd->add_option("--gamma-pure", sim.gamma_pure, "Pure dephasing rate (1/ns)"),
               [&](RunConfig& c) { c.emitter.gamma_pure = sim.gamma_pure; });
  override_opt(simulate_cmd->add_option("--wp", sim.w_p, "Pump rate (1/ns)"),
               [&](RunConfig& c) { c.emitter.w_p = sim.w_p; });
  override_opt(simulate_cmd->add_option("--mode-match", sim.mode_match, "Mode-match factor M"),
               [&](RunConfig& c) { c.interferometer.bs.mode_match = sim.mode_match; });
  override_opt(simulate_cmd->add_option("--irf-fwhm-ns", sim.irf_fwhm, "Pair timing resolution (FWHM)"),
               [&](RunConfig& c) { c.detection.irf_fwhm_pair = sim.irf_fwhm; });
  override_opt(simulate_cmd->add_option("--replicas", sim.replicas, "Independent replicas to merge"),
               [&](RunConfig& c) { c.replicas = sim.replicas; });
  override_opt(simulate_cmd->add_option("--histogram-mode", sim.mode, "tac | full"),
               [&](RunConfig& c) { c.detection.mode = parse_histogram_mode(sim.mode); });
  override_opt(simulate_cmd->add_option("--out", sim.out, "Output directory"),
               [&](RunConfig& c) { c.out_dir = sim.out; });
  simulate_cmd->add_flag("--no-timetags", sim.no_timetags, "Skip timetags.csv");

  AnalyzeArgs az;
  CLI::App* analyze = app.add_subcommand("analyze", "Fit and compare parallel/orthogonal histograms");
  analyze->add_option("parallel", az.par_path, "Parallel-mode histogram CSV")->required();
  analyze->add_option("orthogonal", az.orth_path, "Orthogonal-mode histogram CSV")->required();
  analyze->add_option("--config", az.config, "Run configuration supplying rates, IRF and norm region");
  analyze->add_option("--bin", az.bin, "Rebin factor for fitted curves")->capture_default_str();
  analyze->add_option("--diff-bin", az.diff_bin, "Rebin factor for the difference curve")->capture_default_str();
  az.gamma_spon_opt = analyze->add_option("--gamma-spon", az.gamma_spon, "Fixed emission rate (1/ns)");
  az.irf_opt = analyze->add_option("--irf-fwhm-ns", az.irf_fwhm, "Pair IRF FWHM used by the model");
  az.theta_opt = analyze->add_option("--theta", az.theta, "Beam splitter angle (rad)");
  analyze->add_option("--fit-window-ns", az.fit_window, "Fit |tau| range")->capture_default_str();
  az.v0_window_opt = analyze->add_option("--v0-window-ns", az.v0_window, "V(0) averaging width, default IRF FWHM");
  az.norm_min_opt = analyze->add_option("--norm-min-ns", az.norm_min, "Normalization region lower |tau|");
  az.norm_max_opt = analyze->add_option("--norm-max-ns", az.norm_max, "Normalization region upper |tau|");
  analyze->add_flag("--flat-baseline", az.flat_baseline,
                    "Normalize by the plain wing mean instead of removing the start-stop slope");
  analyze->add_option("--init-gamma-pure", az.init_gamma_pure, "Starting pure dephasing rate")->capture_default_str();
  analyze->add_option("--init-wp", az.init_w_p, "Starting pump rate")->capture_default_str();
  analyze->add_option("--seed", az.seed, "Seed for restart jitter")->capture_default_str();
  analyze->add_option("--out", az.out, "Output directory")->capture_default_str();

  SelftestArgs st;
  CLI::App* selftest = app.add_subcommand("selftest", "Run invariant and oracle checks");
  selftest->add_flag("--quick", st.quick, "Reduced statistics");
  selftest->add_option("--seed", st.seed, "Base seed")->capture_default_str();
  selftest->add_flag("--inject-fault", st.inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  if (*analytic) return guarded(err, [&] { return cmd_analytic(an, out); });
  if (*simulate_cmd) return guarded(err, [&] { return cmd_simulate(sim, out, err); });
  if (*analyze) return guarded(err, [&] { return cmd_analyze(az, out, err); });
  return guarded(err, [&] { return cmd_selftest(st, out, err); });
}

}  // namespace hom
