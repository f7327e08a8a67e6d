#include "hom/detection.hpp"

#include "hom/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hom {

std::string to_string(HistogramMode mode) {
  return mode == HistogramMode::tac ? "tac" : "full";
}

HistogramMode parse_histogram_mode(const std::string& text) {
  if (text == "tac") return HistogramMode::tac;
  if (text == "full" || text == "full_correlation") return HistogramMode::full_correlation;
  throw InvalidInput("histogram mode must be tac|full, got '" + text + "'");
}

double DetectionConfig::detector_sigma() const {
  return fwhm_to_sigma(irf_fwhm_pair / std::numbers::sqrt2);
}

Eigen::Index DetectionConfig::bins() const {
  return static_cast<Eigen::Index>(std::llround((tau_max - tau_min) / bin_width));
}

CorrelationHistogram DetectionConfig::empty_histogram() const {
  validate();
  return CorrelationHistogram::uniform(tau_min, bin_width, bins());
}

void DetectionConfig::validate() const {
  if (!std::isfinite(irf_fwhm_pair) || irf_fwhm_pair < 0.0)
    throw InvalidInput("irf_fwhm must be >= 0");
  for (double e : efficiency) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidInput("efficiency must lie in [0, 1]");
  }
  for (double d : dead_time) {
    if (!std::isfinite(d) || d < 0.0) throw InvalidInput("dead_time must be >= 0");
  }
  if (!(background_fraction >= 0.0 && background_fraction < 1.0))
    throw InvalidInput("background_fraction must lie in [0, 1)");
  if (!(tau_min < tau_max)) throw InvalidInput("mca range needs tau_min < tau_max");
  if (!(bin_width > 0.0)) throw InvalidInput("bin_width must be > 0");
  const double ratio = (tau_max - tau_min) / bin_width;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio || std::round(ratio) < 1.0)
    throw InvalidInput("bin_width must divide the mca range");
  if (electronic_delay && !std::isfinite(*electronic_delay))
    throw InvalidInput("electronic_delay must be finite");
}

std::vector<DetectionEvent> apply_detector(std::span<const DetectionEvent> events,
                                           const DetectionConfig& cfg, double duration, Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double sigma = cfg.detector_sigma();
  std::normal_distribution<double> jitter(0.0, sigma > 0.0 ? sigma : 1.0);

  std::array<std::vector<double>, 2> per_channel;
  for (const DetectionEvent& e : events) {
    const std::size_t slot = channel_slot(e.channel);
    if (uniform(rng) >= cfg.efficiency[slot]) continue;
    per_channel[slot].push_back(sigma > 0.0 ? e.time + jitter(rng) : e.time);
  }

  const double f = cfg.background_fraction;
  if (f > 0.0 && duration > 0.0) {
    const double signal = static_cast<double>(per_channel[0].size() + per_channel[1].size());
    std::poisson_distribution<std::int64_t> count(signal * f / (1.0 - f));
    const std::int64_t n = signal > 0.0 ? count(rng) : 0;
    std::bernoulli_distribution to3(0.5);
    for (std::int64_t i = 0; i < n; ++i) {
      const double t = uniform(rng) * duration;
      per_channel[to3(rng) ? 0 : 1].push_back(t);
    }
  }

  std::vector<DetectionEvent> out;
  out.reserve(per_channel[0].size() + per_channel[1].size());
  for (std::size_t slot = 0; slot < 2; ++slot) {
    std::vector<double>& times = per_channel[slot];
    std::sort(times.begin(), times.end());
    const Channel channel = slot == 0 ? Channel::three : Channel::four;
    const double dead = cfg.dead_time[slot];
    double last = -std::numeric_limits<double>::infinity();
    for (double t : times) {
      if (dead > 0.0 && t - last < dead) continue;
      out.push_back({channel, t});
      last = t;
    }
  }
  std::sort(out.begin(), out.end(), earlier);
  return out;
}

CorrelationHistogram start_stop_histogram(std::span<const DetectionEvent> events,
                                          const DetectionConfig& cfg, StartStopStats* stats) {
  CorrelationHistogram hist = cfg.empty_histogram();
  const double delay = cfg.stop_delay();
  const double full_scale = cfg.tau_max - cfg.tau_min;

  std::vector<double> starts;
  std::vector<double> stops;
  for (const DetectionEvent& e : events) {
    if (e.channel == Channel::three) starts.push_back(e.time);
    else stops.push_back(e.time + delay);
  }

  StartStopStats local{starts.size(), stops.size(), 0};
  std::size_t i = 0;
  std::size_t j = 0;
  bool pending = false;
  double start = 0.0;
  while (j < stops.size()) {
    if (i < starts.size() && starts[i] <= stops[j]) {
      start = starts[i++];
      pending = true;
      continue;
    }
    const double stop = stops[j++];
    if (!pending) continue;
    pending = false;
    const double tac = stop - start;
    if (tac > full_scale) continue;
    const Eigen::Index bin = hist.bin_index(tac - delay);
    if (bin >= 0) {
      ++hist.counts[bin];
      ++local.recorded;
    }
  }
  if (stats) *stats = local;
  return hist;
}

CorrelationHistogram full_correlation_histogram(std::span<const DetectionEvent> events,
                                                const DetectionConfig& cfg) {
  CorrelationHistogram hist = cfg.empty_histogram();
  std::vector<double> ch3;
  std::vector<double> ch4;
  for (const DetectionEvent& e : events) (e.channel == Channel::three ? ch3 : ch4).push_back(e.time);

  std::size_t lo = 0;
  for (double t3 : ch3) {
    while (lo < ch4.size() && ch4[lo] - t3 < cfg.tau_min) ++lo;
    for (std::size_t k = lo; k < ch4.size(); ++k) {
      const double tau = ch4[k] - t3;
      if (tau >= cfg.tau_max) break;
      const Eigen::Index bin = hist.bin_index(tau);
      if (bin >= 0) ++hist.counts[bin];
    }
  }
  return hist;
}

CorrelationHistogram tac_mca_histogram(std::span<const DetectionEvent> events,
                                       const DetectionConfig& cfg, StartStopStats* stats) {
  if (cfg.mode == HistogramMode::full_correlation) {
    if (stats) *stats = {};
    return full_correlation_histogram(events, cfg);
  }
  return start_stop_histogram(events, cfg, stats);
}

}  // namespace hom
