#include "hom/pipeline.hpp"

#include "hom/emitter.hpp"

#include <algorithm>
#include <future>
#include <thread>

namespace hom {

void RunConfig::validate() const {
  emitter.validate();
  interferometer.validate();
  detection.validate();
  if (!std::isfinite(duration) || !(duration > 0.0)) throw InvalidInput("duration must be > 0");
  if (replicas < 1) throw InvalidInput("replicas must be >= 1");
}

RunConfig experiment_defaults() { return RunConfig{}; }

ReplicaResult simulate_replica(const RunConfig& cfg, int replica, bool keep_events) {
  cfg.validate();
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(replica);

  DetectionConfig detection = cfg.detection;
  double keep = 1.0;
  const double weakest = std::min(detection.efficiency[0], detection.efficiency[1]);
  if (cfg.interferometer.pairing != PairingRule::greedy && weakest > 0.0 && weakest < 1.0) {
    keep = weakest;
    for (double& e : detection.efficiency) e = std::min(1.0, e / keep);
  }

  const StreamConfig stream_cfg{cfg.duration, seed, cfg.emitter};
  const std::vector<PhotonEvent> stream = simulate_emission_stream(stream_cfg, keep);

  Rng routing_rng = make_rng(seed, RngStream::routing);
  const std::vector<RoutedPhoton> routed = route(stream, cfg.interferometer, routing_rng);

  ReplicaResult result;
  result.photons = stream.size();
  Rng label_rng = make_rng(seed, RngStream::labels);
  const std::vector<DetectionEvent> ideal =
      assign_detectors(routed, cfg.interferometer, cfg.emitter, label_rng, &result.labels);

  Rng detector_rng = make_rng(seed, RngStream::detector);
  std::vector<DetectionEvent> clicks = apply_detector(ideal, detection, cfg.duration, detector_rng);
  result.histogram = tac_mca_histogram(clicks, detection, &result.start_stop);
  if (keep_events) result.events = std::move(clicks);
  return result;
}

RunResult simulate(const RunConfig& cfg, bool keep_events) {
  cfg.validate();
  std::vector<ReplicaResult> replicas(static_cast<std::size_t>(cfg.replicas));
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers > 1 && cfg.replicas > 1) {
    std::vector<std::future<ReplicaResult>> jobs;
    for (int r = 0; r < cfg.replicas; ++r)
      jobs.push_back(std::async(std::launch::async, simulate_replica, std::cref(cfg), r,
                                keep_events));
    for (int r = 0; r < cfg.replicas; ++r) replicas[static_cast<std::size_t>(r)] = jobs[r].get();
  } else {
    for (int r = 0; r < cfg.replicas; ++r)
      replicas[static_cast<std::size_t>(r)] = simulate_replica(cfg, r, keep_events);
  }

  RunResult out;
  out.histogram = cfg.detection.empty_histogram();
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    ReplicaResult& rep = replicas[r];
    out.histogram.merge(rep.histogram);
    out.labels += rep.labels;
    out.photons += rep.photons;
    out.recorded += static_cast<std::size_t>(rep.histogram.total());
    if (keep_events) {
      const double shift = static_cast<double>(r) * cfg.duration;
      for (DetectionEvent e : rep.events) {
        e.time += shift;
        out.events.push_back(e);
      }
    }
  }
  // Late clicks of one replica can overlap the start of the next.
  std::stable_sort(out.events.begin(), out.events.end(), earlier);
  return out;
}

}  // namespace hom
