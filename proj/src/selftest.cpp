#include "hom/selftest.hpp"

#include "hom/analysis.hpp"
#include "hom/detection.hpp"
#include "hom/emitter.hpp"
#include "hom/interferometer.hpp"
#include "hom/io.hpp"
#include "hom/random.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace hom {

OracleComparison compare_to_analytic(const CorrelationHistogram& h, const EmitterParams& emitter,
                                     const BeamSplitterConfig& bs, PolarizationMode pol,
                                     double max_abs_tau, double interference_sign) {
  if (!h.normalized) throw InvalidInput("oracle comparison needs a normalized histogram");
  constexpr int kSub = 8;
  const double weight = interference_sign * bs.mode_match * bs.interference_coefficient();
  const Eigen::ArrayXd base = h.baseline();
  OracleComparison out;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double c = h.bin_centers[i];
    if (std::abs(c) > max_abs_tau) continue;
    double expected = 0.0;
    for (int j = 0; j < kSub; ++j) {
      const double t = c + h.bin_width * ((j + 0.5) / kSub - 0.5);
      expected += 0.5 * (g2_source(t, emitter) + 1.0);
      if (pol == PolarizationMode::parallel) {
        const double coherence = g1(t, emitter);
        expected -= weight * coherence * coherence;
      }
    }
    expected /= kSub;
    const double sigma =
        std::sqrt(std::max<double>(static_cast<double>(h.counts[i]), 1.0)) / base[i];
    const double z = ((*h.normalized)[i] - expected) / sigma;
    ++out.bins;
    if (std::abs(z) <= 3.0) ++out.within;
    out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
  }
  return out;
}

RunConfig ideal_config(const EmitterParams& emitter, PolarizationMode pol, double photons,
                       std::uint64_t seed, double efficiency) {
  RunConfig cfg = experiment_defaults();
  cfg.emitter = emitter;
  cfg.interferometer.pol = pol;
  cfg.detection.irf_fwhm_pair = 0.0;
  cfg.detection.efficiency = {efficiency, efficiency};
  cfg.detection.dead_time = {0.0, 0.0};
  cfg.detection.background_fraction = 0.0;
  cfg.detection.mode = HistogramMode::full_correlation;
  cfg.duration = photons / mean_emission_rate(emitter);
  cfg.seed = seed;
  cfg.write_timetags = false;
  return cfg;
}

namespace {

EmitterParams dephased_emitter() {
  EmitterParams p;
  p.gamma_spon = 1.0;
  p.gamma_pure = 3.0;
  p.w_p = 2.5;
  return p;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

struct Context {
  SelftestOptions opt;
  double scale() const { return opt.quick ? 0.2 : 1.0; }
};

CheckResult check_analytic_identities(const Context&) {
  const EmitterParams p = dephased_emitter();
  const Eigen::ArrayXd tau = Eigen::ArrayXd::LinSpaced(401, -2.0, 2.0);
  double worst = 0.0;
  for (double theta : {0.0, 0.3, std::numbers::pi / 4.0, 1.2}) {
    BeamSplitterConfig bs;
    bs.theta = theta;
    bs.mode_match = 0.8;
    const Eigen::ArrayXd par = g2_34(tau, p, bs, PolarizationMode::parallel);
    const Eigen::ArrayXd orth = g2_34(tau, p, bs, PolarizationMode::orthogonal);
    const Eigen::ArrayXd gap = orth - par;
    const Eigen::ArrayXd expected = bs.mode_match * bs.interference_coefficient() * g1(tau, p).square();
    worst = std::max(worst, (gap - expected).abs().maxCoeff());
    if ((gap < -1e-15).any()) return {"", false, "orth - par negative"};
    worst = std::max(worst, (par - par.reverse()).abs().maxCoeff());
    worst = std::max(worst, (orth - orth.reverse()).abs().maxCoeff());
  }
  for (double theta : {0.0, std::numbers::pi / 2.0}) {
    BeamSplitterConfig bs;
    bs.theta = theta;
    bs.mode_match = 1.0;
    const Eigen::ArrayXd gap = g2_34(tau, p, bs, PolarizationMode::orthogonal) -
                               g2_34(tau, p, bs, PolarizationMode::parallel);
    worst = std::max(worst, gap.abs().maxCoeff());
  }
  for (double t : {0.0, 0.3, 1.7, 4.6}) {
    const double c = g1(-t, p);
    worst = std::max(worst, std::abs(c * c - overlap_sq(t, p)));
  }
  return {"", worst < 1e-12, "max deviation " + fmt(worst)};
}

CheckResult check_irf_routes(const Context&) {
  const double fwhm = 0.42;
  const double rate = 1.5;
  const Eigen::ArrayXd tau = Eigen::ArrayXd::LinSpaced(4001, -10.0, 10.0);
  const Eigen::ArrayXd curve = (-rate * tau.abs()).exp();
  const Eigen::ArrayXd numeric = convolve_irf(tau, curve, fwhm);
  double worst = 0.0;
  for (Eigen::Index i = 1000; i <= 3000; ++i)
    worst = std::max(worst, std::abs(numeric[i] - gaussian_smeared_decay(tau[i], rate, fwhm_to_sigma(fwhm))));
  return {"", worst < 1e-4, "numerical vs closed form " + fmt(worst)};
}

CheckResult check_emitter_determinism(const Context& ctx) {
  StreamConfig cfg;
  cfg.duration = 2e4;
  cfg.rng_seed = ctx.opt.seed;
  const auto a = simulate_emission_stream(cfg);
  const auto b = simulate_emission_stream(cfg);
  return {"", !a.empty() && a == b, std::to_string(a.size()) + " photons"};
}

CheckResult check_waiting_time(const Context& ctx) {
  EmitterParams p = dephased_emitter();
  p.gamma_vib = 5.0;
  StreamConfig cfg{2e5 * ctx.scale() + 2e4, ctx.opt.seed + 11, p};
  const auto s = simulate_emission_stream(cfg);
  const std::size_t n = s.size() - 1;
  Eigen::ArrayXd gaps(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    gaps[static_cast<Eigen::Index>(i)] = s[i + 1].emission_time - s[i].emission_time;
  const double mean = gaps.mean();
  const Eigen::ArrayXd dev = gaps - mean;
  const double var = dev.square().mean();
  const double m4 = dev.square().square().mean();
  const double want_mean = 1.0 / p.w_p + 1.0 / *p.gamma_vib + 1.0 / p.gamma_spon;
  const double want_var = 1.0 / (p.w_p * p.w_p) + 1.0 / (*p.gamma_vib * *p.gamma_vib) +
                          1.0 / (p.gamma_spon * p.gamma_spon);
  const double z_mean = (mean - want_mean) / std::sqrt(var / n);
  const double z_var = (var - want_var) / std::sqrt((m4 - var * var) / n);
  return {"", std::abs(z_mean) < 3.0 && std::abs(z_var) < 3.0,
          "z(mean) " + fmt(z_mean) + ", z(var) " + fmt(z_var)};
}

CheckResult check_antibunching(const Context& ctx) {
  const EmitterParams p = dephased_emitter();
  const double photons = ctx.opt.quick ? 2e5 : 1e6;
  StreamConfig cfg{photons / mean_emission_rate(p), ctx.opt.seed + 12, p};
  const auto s = simulate_emission_stream(cfg);
  const CorrelationHistogram h = empirical_g2(s, 0.02 / p.gamma_spon, 1.0 / p.gamma_spon);
  const double at_zero = (*h.normalized)[h.bin_index(0.0)];
  return {"", at_zero < 0.1, "g2(0) " + fmt(at_zero) + " over " + std::to_string(s.size())};
}

CheckResult check_pair_law_bounds(const Context& ctx) {
  Rng rng = make_rng(ctx.opt.seed, RngStream::fit);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  EmitterParams p;
  int bad = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    InterferometerConfig cfg;
    cfg.bs.theta = u01(rng) * std::numbers::pi / 2.0;
    cfg.bs.mode_match = u01(rng);
    cfg.pol = u01(rng) < 0.5 ? PolarizationMode::parallel : PolarizationMode::orthogonal;
    RoutedPhoton a{0, 10.0 * u01(rng), 5.0 * u01(rng), Arm::short_arm, PolarizationAxis::horizontal};
    RoutedPhoton b{1, a.arrival_time + 5.0 * (u01(rng) - 0.5), 5.0 * u01(rng), Arm::long_arm,
                   cfg.pol == PolarizationMode::parallel ? PolarizationAxis::horizontal
                                                          : PolarizationAxis::vertical};
    const PairLaw law = coincidence_law(a, b, cfg, p);
    const double t = cfg.bs.transmission();
    const double r = cfg.bs.reflection();
    const double hi = t * t + r * r;
    const double lo = hi - 2.0 * t * r;
    if (law.p_coincidence < lo - 1e-12 || law.p_coincidence > hi + 1e-12) ++bad;
    if (law.envelope_ratio < 0.0 || law.envelope_ratio > 1.0 + 1e-12) ++bad;
  }
  const double equal = envelope_ratio(3.0, 2.5, 1.0, 1.0, p.gamma_spon);
  if (std::abs(equal - 1.0) > 1e-12) ++bad;
  return {"", bad == 0, std::to_string(bad) + " violations in " + std::to_string(trials)};
}

CheckResult check_oracle(const Context& ctx, const EmitterParams& p, double mode_match,
                         const std::string& label) {
  const double photons = ctx.opt.quick ? 2e6 : 5e6;
  std::string detail;
  bool ok = true;
  for (PolarizationMode pol : {PolarizationMode::parallel, PolarizationMode::orthogonal}) {
    RunConfig cfg = ideal_config(p, pol, photons, ctx.opt.seed + 20, 0.2);
    cfg.interferometer.bs.mode_match = mode_match;
    const RunResult run = simulate(cfg, false);
    check_norm_region(run.histogram, cfg.norm, p.gamma_spon, cfg.interferometer.delta_t);
    const CorrelationHistogram h = normalize(run.histogram, cfg.norm);
    const OracleComparison cmp =
        compare_to_analytic(h, p, cfg.interferometer.bs, pol, 0.5 / p.gamma_spon,
                            ctx.opt.inject_fault ? -1.0 : 1.0);
    ok = ok && cmp.fraction() >= 0.95;
    detail += (detail.empty() ? "" : "; ") + label + " " + to_string(pol) + " " +
              std::to_string(cmp.within) + "/" + std::to_string(cmp.bins) + " within 3 sigma";
  }
  return {"", ok, detail};
}

CheckResult check_orthogonal_equals_unmatched(const Context& ctx) {
  EmitterParams p;
  const double photons = ctx.opt.quick ? 1e5 : 4e5;
  RunConfig orth = ideal_config(p, PolarizationMode::orthogonal, photons, ctx.opt.seed + 30);
  RunConfig unmatched = ideal_config(p, PolarizationMode::parallel, photons, ctx.opt.seed + 31);
  unmatched.interferometer.bs.mode_match = 0.0;
  const RunResult a = simulate(orth, false);
  const RunResult b = simulate(unmatched, false);
  int bins = 0;
  int within = 0;
  for (Eigen::Index i = 0; i < a.histogram.size(); ++i) {
    if (std::abs(a.histogram.bin_centers[i]) > 10.0) continue;
    const double x = static_cast<double>(a.histogram.counts[i]);
    const double y = static_cast<double>(b.histogram.counts[i]);
    const double z = (x - y) / std::sqrt(std::max(x + y, 1.0));
    ++bins;
    if (std::abs(z) <= 3.0) ++within;
  }
  const double fraction = static_cast<double>(within) / bins;
  return {"", fraction >= 0.95, std::to_string(within) + "/" + std::to_string(bins) + " bins consistent"};
}

CheckResult check_tac_conservation(const Context& ctx) {
  RunConfig cfg = experiment_defaults();
  cfg.duration = ctx.opt.quick ? 2e6 : 1e7;
  cfg.detection.efficiency = {0.3, 0.3};
  cfg.detection.dead_time = {20.0, 20.0};
  cfg.seed = ctx.opt.seed + 40;
  const ReplicaResult r = simulate_replica(cfg, 0, false);
  const auto total = static_cast<std::size_t>(r.histogram.total());
  const bool ok = total == r.start_stop.recorded && total <= r.start_stop.starts && total > 0;
  return {"", ok,
          std::to_string(total) + " recorded of " + std::to_string(r.start_stop.starts) + " starts"};
}

CheckResult check_full_correlation_bruteforce(const Context& ctx) {
  RunConfig cfg = ideal_config(EmitterParams{}, PolarizationMode::parallel, 2e4, ctx.opt.seed + 50);
  const RunResult run = simulate(cfg, true);
  CorrelationHistogram brute = cfg.detection.empty_histogram();
  for (const DetectionEvent& a : run.events) {
    if (a.channel != Channel::three) continue;
    for (const DetectionEvent& b : run.events) {
      if (b.channel != Channel::four) continue;
      const Eigen::Index bin = brute.bin_index(b.time - a.time);
      if (bin >= 0) ++brute.counts[bin];
    }
  }
  const bool ok = (brute.counts == run.histogram.counts).all() && brute.total() > 0;
  return {"", ok, std::to_string(brute.total()) + " pairs"};
}

CheckResult check_jitter_total(const Context& ctx) {
  RunConfig cfg = ideal_config(EmitterParams{}, PolarizationMode::parallel,
                               ctx.opt.quick ? 5e4 : 2e5, ctx.opt.seed + 60);
  const RunResult sharp = simulate(cfg, false);
  cfg.detection.irf_fwhm_pair = 0.42;
  const RunResult blurred = simulate(cfg, false);
  const double a = static_cast<double>(sharp.histogram.total());
  const double b = static_cast<double>(blurred.histogram.total());
  const double leak = std::abs(a - b) / a;
  return {"", leak < 1e-3, "relative change " + fmt(leak)};
}

CheckResult check_efficiency_scaling(const Context& ctx) {
  const double s = 0.5;
  RunConfig cfg = ideal_config(EmitterParams{}, PolarizationMode::parallel,
                               ctx.opt.quick ? 2e5 : 1e6, ctx.opt.seed + 70);
  const RunResult full = simulate(cfg, false);
  cfg.detection.efficiency = {s, s};
  cfg.seed += 1;
  const RunResult thinned = simulate(cfg, false);
  const double s4 = s * s * s * s;
  int bins = 0;
  int within = 0;
  for (Eigen::Index i = 0; i < full.histogram.size(); ++i) {
    if (std::abs(full.histogram.bin_centers[i]) > 10.0) continue;
    const double a = static_cast<double>(full.histogram.counts[i]);
    const double b = static_cast<double>(thinned.histogram.counts[i]);
    const double z = (b - s * s * a) / std::sqrt(std::max(b + s4 * a, 1.0));
    ++bins;
    if (std::abs(z) <= 3.0) ++within;
  }
  const double ratio = static_cast<double>(thinned.histogram.total()) / full.histogram.total();
  return {"", within >= 0.95 * bins,
          std::to_string(within) + "/" + std::to_string(bins) + " bins, total ratio " + fmt(ratio)};
}

CorrelationHistogram synthetic_histogram(const ModelCurves& m, const Eigen::ArrayXd& centers,
                                         double width, bool parallel, double scale, Rng* rng) {
  CorrelationHistogram h = CorrelationHistogram::uniform(centers[0] - 0.5 * width, width, centers.size());
  const Eigen::ArrayXd& curve = parallel ? m.parallel : m.orthogonal;
  for (Eigen::Index i = 0; i < curve.size(); ++i) {
    const double mean = scale * curve[i];
    if (rng) {
      std::poisson_distribution<std::int64_t> draw(mean);
      h.counts[i] = draw(*rng);
    } else {
      h.counts[i] = std::llround(mean);
    }
  }
  h.normalization_constant = scale;
  h.normalized = h.counts.cast<double>() / scale;
  return h;
}

CheckResult check_fit_noise_free(const Context&) {
  const CorrelationHistogram grid = CorrelationHistogram::centered(0.1, 5.0);
  const FitParameters truth{0.2, 0.5, 0.7, 0.05};
  DetectionConfig det;
  const double gamma_spon = 1.0 / 3.4;
  const ModelCurves m =
      hom_model(grid.bin_centers, grid.bin_width, truth, gamma_spon, std::numbers::pi / 4.0, det.irf_fwhm_pair);
  const auto par = synthetic_histogram(m, grid.bin_centers, grid.bin_width, true, 1e6, nullptr);
  const auto orth = synthetic_histogram(m, grid.bin_centers, grid.bin_width, false, 1e6, nullptr);
  const HomFitResult fit = fit_hom_model(par, orth, gamma_spon, det, {0.25, 0.6, 0.6, 0.08});
  const double worst = std::max({std::abs(fit.gamma_pure_hat / 0.2 - 1.0), std::abs(fit.w_p_hat / 0.5 - 1.0),
                                 std::abs(fit.contrast_hat / 0.7 - 1.0)});
  return {"", worst < 1e-4, "worst relative error " + fmt(worst)};
}

CheckResult check_fit_scale_invariance(const Context& ctx) {
  const CorrelationHistogram grid = CorrelationHistogram::centered(0.1, 5.0);
  const FitParameters truth{0.2, 8.0, 0.7, 0.1};
  DetectionConfig det;
  const double gamma_spon = 1.0 / 3.4;
  const ModelCurves m =
      hom_model(grid.bin_centers, grid.bin_width, truth, gamma_spon, std::numbers::pi / 4.0, det.irf_fwhm_pair);
  Rng rng = make_rng(ctx.opt.seed + 80, RngStream::fit);
  auto par = synthetic_histogram(m, grid.bin_centers, grid.bin_width, true, 2000.0, &rng);
  auto orth = synthetic_histogram(m, grid.bin_centers, grid.bin_width, false, 2000.0, &rng);
  const HomFitResult a = fit_hom_model(par, orth, gamma_spon, det, {0.25, 7.0, 0.6, 0.05});
  for (auto* h : {&par, &orth}) {
    h->counts *= 4;
    h->normalization_constant *= 4.0;
  }
  const HomFitResult b = fit_hom_model(par, orth, gamma_spon, det, {0.25, 7.0, 0.6, 0.05});
  const double worst = std::max({std::abs(a.gamma_pure_hat - b.gamma_pure_hat), std::abs(a.w_p_hat - b.w_p_hat),
                                 std::abs(a.contrast_hat - b.contrast_hat),
                                 std::abs(a.background_hat - b.background_hat)});
  return {"", worst < 1e-6, "max parameter change " + fmt(worst)};
}

CheckResult check_histogram_algebra(const Context& ctx) {
  Rng rng = make_rng(ctx.opt.seed + 90, RngStream::detector);
  std::poisson_distribution<std::int64_t> draw(50.0);
  CorrelationHistogram h = CorrelationHistogram::uniform(-30.0, 0.05, 1200);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.counts[i] = draw(rng);
  const NormRegion region{15.0, 28.0};
  const CorrelationHistogram a = normalize(rebin(h, 4), region);
  const CorrelationHistogram b = rebin(normalize(h, region), 4);
  const double commute = (*a.normalized - *b.normalized).abs().maxCoeff();
  const DifferenceCurve self = difference_curve(normalize(h, region), normalize(h, region));
  const bool zero = (self.value == 0.0).all();
  const bool conserved = rebin(h, 5).total() == h.total();
  return {"", commute < 1e-12 && zero && conserved,
          "commute " + fmt(commute) + (zero ? ", self-difference zero" : ", self-difference nonzero") +
              (conserved ? "" : ", rebin lost counts")};
}

CheckResult check_round_trips(const Context& ctx) {
  Rng rng = make_rng(ctx.opt.seed + 100, RngStream::detector);
  std::uniform_real_distribution<double> u(0.0, 1e6);
  std::poisson_distribution<std::int64_t> draw(30.0);
  CorrelationHistogram h = CorrelationHistogram::uniform(-30.0, 0.05, 1200);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.counts[i] = draw(rng);
  h = normalize(h, NormRegion{});
  const CorrelationHistogram back = parse_histogram_csv(histogram_csv(h));
  bool ok = (back.bin_centers == h.bin_centers).all() && (back.counts == h.counts).all() &&
            back.normalized && (*back.normalized == *h.normalized).all();

  std::vector<DetectionEvent> events;
  for (int i = 0; i < 200; ++i) events.push_back({i % 3 ? Channel::three : Channel::four, u(rng)});
  ok = ok && parse_timetags_csv(timetags_csv(events)) == events;

  RunConfig cfg = experiment_defaults();
  cfg.interferometer.bs.theta = 0.7;
  cfg.emitter.gamma_vib = 12.5;
  const KeyValues echoed = config_to_key_values(cfg);
  ok = ok && config_to_key_values(config_from_key_values(parse_key_values(format_key_values(echoed)))) == echoed;
  return {"", ok, "histogram, time tags and config echo"};
}

CheckResult check_pipeline_determinism(const Context& ctx) {
  RunConfig cfg = experiment_defaults();
  cfg.duration = 2e6;
  cfg.replicas = 2;
  cfg.seed = ctx.opt.seed + 110;
  const RunResult a = simulate(cfg, true);
  const RunResult b = simulate(cfg, true);
  const bool ok = (a.histogram.counts == b.histogram.counts).all() && a.events == b.events;
  return {"", ok, std::to_string(a.events.size()) + " clicks"};
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestOptions& options, std::ostream* log) {
  const Context ctx{options};
  EmitterParams experiment;
  const std::vector<std::pair<std::string, std::function<CheckResult()>>> checks = {
      {"analytic_identities", [&] { return check_analytic_identities(ctx); }},
      {"irf_convolution_routes", [&] { return check_irf_routes(ctx); }},
      {"emitter_determinism", [&] { return check_emitter_determinism(ctx); }},
      {"waiting_time_moments", [&] { return check_waiting_time(ctx); }},
      {"antibunching", [&] { return check_antibunching(ctx); }},
      {"pair_law_bounds", [&] { return check_pair_law_bounds(ctx); }},
      {"oracle_dephased", [&] { return check_oracle(ctx, dephased_emitter(), 1.0, "dephased"); }},
      {"oracle_experiment", [&] { return check_oracle(ctx, experiment, 0.7, "experiment"); }},
      {"orthogonal_equals_unmatched", [&] { return check_orthogonal_equals_unmatched(ctx); }},
      {"tac_count_conservation", [&] { return check_tac_conservation(ctx); }},
      {"full_correlation_bruteforce", [&] { return check_full_correlation_bruteforce(ctx); }},
      {"jitter_preserves_total", [&] { return check_jitter_total(ctx); }},
      {"efficiency_scaling", [&] { return check_efficiency_scaling(ctx); }},
      {"fit_noise_free_recovery", [&] { return check_fit_noise_free(ctx); }},
      {"fit_scale_invariance", [&] { return check_fit_scale_invariance(ctx); }},
      {"histogram_algebra", [&] { return check_histogram_algebra(ctx); }},
      {"round_trips", [&] { return check_round_trips(ctx); }},
      {"pipeline_determinism", [&] { return check_pipeline_determinism(ctx); }},
  };

  std::vector<CheckResult> results;
  for (const auto& [name, run] : checks) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {"", false, std::string("exception: ") + e.what()};
    }
    r.name = name;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (log) {
      *log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " ("
           << fmt(seconds) << " s)\n";
      log->flush();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace hom
