#ifndef HOM_PIPELINE_HPP
#define HOM_PIPELINE_HPP

#include "hom/detection.hpp"
#include "hom/interferometer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hom {

/// Everything one simulate run needs. Replica r uses seed + r.
struct RunConfig {
  EmitterParams emitter;
  InterferometerConfig interferometer;
  DetectionConfig detection;
  NormRegion norm;
  double duration = 1e8;
  std::uint64_t seed = 1;
  int replicas = 1;
  bool write_timetags = true;
  std::string out_dir = "out";

  void validate() const;
};

/// Experiment defaults: 1/3.4 ns^-1 emission, 0.2 ns^-1 pure dephasing,
/// 4.6 ns delay, 50/50 splitter, M = 0.7, 0.42 ns pair IRF, 5% background.
RunConfig experiment_defaults();

struct ReplicaResult {
  CorrelationHistogram histogram;
  /// Detector clicks, kept only when requested.
  std::vector<DetectionEvent> events;
  LabelStats labels;
  StartStopStats start_stop;
  std::size_t photons = 0;
};

/// emitter -> interferometer -> detectors -> histogram for one replica. When the
/// pairing rule allows it, the stream is pre-thinned by the smaller detector
/// efficiency before interference (pairwise statistics are unchanged by
/// independent thinning) and the detectors apply the remaining ratio.
ReplicaResult simulate_replica(const RunConfig& cfg, int replica, bool keep_events);

struct RunResult {
  CorrelationHistogram histogram;
  /// Concatenated clicks; replica r is shifted by r * duration.
  std::vector<DetectionEvent> events;
  LabelStats labels;
  /// Photons sent through the interferometer, after any pre-thinning.
  std::size_t photons = 0;
  std::size_t recorded = 0;
};

/// Runs all replicas (concurrently when hardware allows) and merges them in
/// replica order, so the result does not depend on scheduling.
RunResult simulate(const RunConfig& cfg, bool keep_events);

}  // namespace hom

#endif  // HOM_PIPELINE_HPP
