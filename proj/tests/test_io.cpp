#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hom/io.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace hom;

TEST_CASE("number text round trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(parse_number(format_number(x)) == x);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::isnan(parse_number(format_number(std::nan("")))));
  CHECK(parse_number(format_number(-std::numeric_limits<double>::infinity())) ==
        -std::numeric_limits<double>::infinity());
  CHECK(parse_number(" +2.5 ") == 2.5);
  CHECK_THROWS_AS(parse_number("2.5x"), InvalidInput);
  CHECK_THROWS_AS(parse_number(""), InvalidInput);
}

TEST_CASE("key value files") {
  const KeyValues kv = parse_key_values("# comment\n a = 1 \n\nb=two # trailing\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"a", "1"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"b", "two"});
  CHECK(parse_key_values(format_key_values(kv)) == kv);
  CHECK_THROWS_AS(parse_key_values("novalue\n"), InvalidInput);
  CHECK_THROWS_AS(parse_key_values(" = 3\n"), InvalidInput);
}

TEST_CASE("config round trip") {
  RunConfig cfg = experiment_defaults();
  cfg.emitter.gamma_vib = 5.0;
  cfg.interferometer.bs.theta = 0.3;
  cfg.interferometer.pol = PolarizationMode::orthogonal;
  cfg.interferometer.pairing = PairingRule::greedy;
  cfg.detection.mode = HistogramMode::full_correlation;
  cfg.detection.dead_time = {20.0, 30.0};
  cfg.seed = 18446744073709551615ull;
  cfg.replicas = 3;
  cfg.write_timetags = false;
  const KeyValues kv = config_to_key_values(cfg);
  const RunConfig back = config_from_key_values(kv);
  CHECK(config_to_key_values(back) == kv);
  CHECK(back.seed == cfg.seed);
  CHECK(back.emitter.gamma_vib == 5.0);
  CHECK(back.interferometer.pairing == PairingRule::greedy);
  CHECK(back.detection.dead_time[1] == 30.0);
}

TEST_CASE("config defaults and errors") {
  const RunConfig d = config_from_key_values({});
  CHECK(d.emitter.gamma_spon == doctest::Approx(1.0 / 3.4));
  CHECK(d.emitter.gamma_pure == 0.2);
  CHECK(d.interferometer.delta_t == 4.6);
  CHECK(d.interferometer.bs.mode_match == 0.7);
  CHECK(d.detection.irf_fwhm_pair == 0.42);

  const RunConfig a = config_from_key_values({{"gamma_vib", "instantaneous"},
                                              {"pairing_window_ns", "auto"},
                                              {"electronic_delay_ns", "auto"}});
  CHECK(!a.emitter.gamma_vib);
  CHECK(!a.interferometer.pairing_window);
  CHECK(!a.detection.electronic_delay);

  CHECK_THROWS_AS(config_from_key_values({{"colour", "blue"}}), InvalidInput);
  CHECK_THROWS_AS(config_from_key_values({{"gamma_pure", "fast"}}), InvalidInput);
  CHECK_THROWS_AS(config_from_key_values({{"pol", "diagonal"}}), InvalidInput);
  CHECK_THROWS_AS(config_from_key_values({{"seed", "-1"}}), InvalidInput);
}

TEST_CASE("timetag csv round trip") {
  const std::vector<DetectionEvent> ev{{Channel::three, 0.1}, {Channel::four, 1.0 / 3.0}};
  const std::string text = timetags_csv(ev);
  CHECK(text.rfind("channel,time_ns\n", 0) == 0);
  CHECK(parse_timetags_csv(text) == ev);
  CHECK(parse_timetags_csv(timetags_csv({})).empty());
  CHECK_THROWS_AS(parse_timetags_csv("channel,time_ns\n5,1.0\n"), IoError);
  CHECK_THROWS_AS(parse_timetags_csv("time,channel\n"), IoError);
  CHECK_THROWS_AS(parse_timetags_csv("channel,time_ns\n3\n"), IoError);
}

TEST_CASE("histogram csv round trip") {
  CorrelationHistogram h = CorrelationHistogram::uniform(-30.0, 0.05, 1200);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.counts[i] = 100 + (i * 7919) % 31;
  const CorrelationHistogram raw = parse_histogram_csv(histogram_csv(h));
  CHECK(raw.same_geometry(h));
  CHECK((raw.counts == h.counts).all());
  CHECK(!raw.normalized);

  const CorrelationHistogram n = normalize_start_stop(h, NormRegion{});
  const CorrelationHistogram back = parse_histogram_csv(histogram_csv(n));
  REQUIRE(back.normalized);
  CHECK((*back.normalized == *n.normalized).all());
  CHECK((back.bin_centers == n.bin_centers).all());
  CHECK(back.normalization_constant == n.normalization_constant);
  CHECK(back.baseline_slope == n.baseline_slope);
  CHECK(histogram_csv(back) == histogram_csv(n));

  const CorrelationHistogram t = rebin(h, 7);
  CHECK(parse_histogram_csv(histogram_csv(t)).truncated);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "hom_test_io";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "x.txt", "seed = 4\n");
  CHECK(read_text_file(dir / "x.txt") == "seed = 4\n");
  CHECK(read_config(dir / "x.txt").seed == 4);
  CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), IoError);
  CHECK_THROWS_AS(read_histogram(dir / "missing.csv"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fit result keys") {
  HomFitResult fit;
  fit.gamma_pure_hat = 0.2;
  fit.converged = true;
  const KeyValues kv = fit_results(fit);
  std::vector<std::string> keys;
  for (const auto& [k, v] : kv) keys.push_back(k);
  for (const char* want : {"gamma_pure_hat_per_ns", "w_p_hat_per_ns", "contrast_hat",
                           "background_hat", "t2_hat_ns", "v0_hat", "stderr_gamma_pure_per_ns",
                           "stderr_w_p_per_ns", "stderr_contrast", "stderr_background", "rss",
                           "converged"})
    CHECK(std::find(keys.begin(), keys.end(), want) != keys.end());
}

TEST_CASE("difference and curve csv") {
  DifferenceCurve d;
  d.tau = Eigen::ArrayXd::LinSpaced(3, -1.0, 1.0);
  d.value = Eigen::ArrayXd::Zero(3);
  d.sigma = Eigen::ArrayXd::Constant(3, 0.5);
  d.defined = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(3, true);
  d.value[1] = std::nan("");
  CHECK(difference_csv(d) == "tau_ns,value,sigma\n-1,0,0.5\n0,nan,0.5\n1,0,0.5\n");
  const std::string c = curves_csv({{"T2_ns", "2.5"}}, d.tau, {{"g", d.sigma}});
  CHECK(c == "# T2_ns=2.5\ntau_ns,g\n-1,0.5\n0,0.5\n1,0.5\n");
}
