#ifndef HOM_DETECTION_HPP
#define HOM_DETECTION_HPP

#include "hom/events.hpp"
#include "hom/histogram.hpp"
#include "hom/random.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hom {

enum class HistogramMode {
  /// Single-stop TAC: a start (channel 3) is consumed by its first delayed stop
  /// (channel 4); a new start replaces a pending one.
  tac,
  /// Every channel-3/channel-4 pair inside the MCA range is histogrammed.
  full_correlation,
};

std::string to_string(HistogramMode mode);
HistogramMode parse_histogram_mode(const std::string& text);

struct DetectionConfig {
  /// Timing resolution of the detector pair (FWHM, ns). Each APD gets 1/sqrt(2) of it.
  double irf_fwhm_pair = 0.42;
  /// Per-detector efficiency, indexed by channel_slot().
  std::array<double, 2> efficiency{0.05, 0.05};
  std::array<double, 2> dead_time{0.0, 0.0};
  /// Fraction of all clicks that are background (uniform in time, random channel).
  double background_fraction = 0.05;
  /// Delay added to the stop pulse; defaults to -tau_min.
  std::optional<double> electronic_delay;
  double tau_min = -30.0;
  double tau_max = 30.0;
  double bin_width = 0.05;
  HistogramMode mode = HistogramMode::tac;

  double stop_delay() const { return electronic_delay.value_or(-tau_min); }
  double detector_sigma() const;
  Eigen::Index bins() const;
  CorrelationHistogram empty_histogram() const;
  void validate() const;
};

/// APD model: efficiency thinning, Gaussian jitter, background clicks over
/// [0, duration), then non-paralysable dead time per channel. Input must be
/// sorted per channel; output is time sorted.
std::vector<DetectionEvent> apply_detector(std::span<const DetectionEvent> events,
                                           const DetectionConfig& cfg, double duration, Rng& rng);

struct StartStopStats {
  std::size_t starts = 0;
  std::size_t stops = 0;
  std::size_t recorded = 0;
};

/// Histogram of tau = t_stop - t_start per cfg.mode. Events must be time sorted.
CorrelationHistogram tac_mca_histogram(std::span<const DetectionEvent> events,
                                       const DetectionConfig& cfg,
                                       StartStopStats* stats = nullptr);

CorrelationHistogram start_stop_histogram(std::span<const DetectionEvent> events,
                                          const DetectionConfig& cfg,
                                          StartStopStats* stats = nullptr);

CorrelationHistogram full_correlation_histogram(std::span<const DetectionEvent> events,
                                                const DetectionConfig& cfg);

}  // namespace hom

#endif  // HOM_DETECTION_HPP
