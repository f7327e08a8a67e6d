#include "hom/interferometer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hom {

namespace {

constexpr double kInterferenceCutoff = 1e-9;
constexpr Eigen::Index kMaxCluster = 48;

using ClusterMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxCluster,
                                    kMaxCluster>;
using ClusterVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxCluster, 1>;

double bernoulli_mean(Arm arm, const BeamSplitterConfig& bs) {
  // E[s] with s = +1 for detector 3, -1 for detector 4.
  const double cos2theta = bs.transmission() - bs.reflection();
  return arm == Arm::short_arm ? cos2theta : -cos2theta;
}

double p_detector3(Arm arm, const BeamSplitterConfig& bs) {
  return arm == Arm::short_arm ? bs.transmission() : bs.reflection();
}

double dephasing_factor(PolarizationAxis a, PolarizationAxis b, double dt,
                        const InterferometerConfig& cfg, const EmitterParams& emitter) {
  if (a != b) return 0.0;
  return cfg.bs.mode_match * std::exp(-2.0 * emitter.gamma_pure * std::abs(dt));
}

}  // namespace

std::string to_string(PairingRule rule) {
  switch (rule) {
    case PairingRule::correlated: return "correlated";
    case PairingRule::greedy: return "greedy";
    case PairingRule::none: return "none";
  }
  return "correlated";
}

PairingRule parse_pairing_rule(const std::string& text) {
  if (text == "correlated") return PairingRule::correlated;
  if (text == "greedy") return PairingRule::greedy;
  if (text == "none") return PairingRule::none;
  throw InvalidInput("pairing must be correlated|greedy|none, got '" + text + "'");
}

void InterferometerConfig::validate() const {
  if (!std::isfinite(delta_t) || delta_t < 0.0) throw InvalidInput("delta_t must be >= 0");
  bs.validate();
  if (!(arm_prob_long >= 0.0 && arm_prob_long <= 1.0))
    throw InvalidInput("arm_prob_long must lie in [0, 1]");
  if (pairing_window && !(*pairing_window > 0.0))
    throw InvalidInput("pairing_window must be > 0");
}

LabelStats& LabelStats::operator+=(const LabelStats& o) {
  photons += o.photons;
  conditioned += o.conditioned;
  clipped += o.clipped;
  pairs += o.pairs;
  largest_cluster = std::max(largest_cluster, o.largest_cluster);
  return *this;
}

std::vector<RoutedPhoton> route(std::span<const PhotonEvent> stream,
                                const InterferometerConfig& cfg, Rng& rng) {
  cfg.validate();
  std::bernoulli_distribution goes_long(cfg.arm_prob_long);
  const PolarizationAxis long_axis = cfg.pol == PolarizationMode::parallel
                                         ? PolarizationAxis::horizontal
                                         : PolarizationAxis::vertical;
  std::vector<RoutedPhoton> out;
  out.reserve(stream.size());
  for (const PhotonEvent& e : stream) {
    if (goes_long(rng)) {
      out.push_back({e.photon_id, e.emission_time + cfg.delta_t, e.decay_delay, Arm::long_arm,
                     long_axis});
    } else {
      out.push_back({e.photon_id, e.emission_time, e.decay_delay, Arm::short_arm,
                     PolarizationAxis::horizontal});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const RoutedPhoton& a, const RoutedPhoton& b) {
    return a.arrival_time < b.arrival_time;
  });
  return out;
}

double envelope_ratio(double u, double v, double arrival_a, double arrival_b, double gamma_spon) {
  // P1 = Ea(u) Eb(v), P2 = Ea(v) Eb(u); R = 2 P1 P2 / (P1^2 + P2^2) = 1 / cosh(ln P1 - ln P2).
  const bool p1 = u >= arrival_a && v >= arrival_b;
  const bool p2 = v >= arrival_a && u >= arrival_b;
  if (!p1 || !p2) return 0.0;
  const double log_p1 = -0.5 * gamma_spon * ((u - arrival_a) + (v - arrival_b));
  const double log_p2 = -0.5 * gamma_spon * ((v - arrival_a) + (u - arrival_b));
  return 1.0 / std::cosh(log_p1 - log_p2);
}

PairLaw coincidence_law(const RoutedPhoton& a, const RoutedPhoton& b,
                        const InterferometerConfig& cfg, const EmitterParams& emitter) {
  if (a.arm == b.arm) throw InvalidInput("coincidence_law: photons must come from opposite arms");
  const double t = cfg.bs.transmission();
  const double r = cfg.bs.reflection();
  PairLaw law;
  law.envelope_ratio = envelope_ratio(a.detection_time(), b.detection_time(), a.arrival_time,
                                      b.arrival_time, emitter.gamma_spon);
  law.dephasing_factor = dephasing_factor(a.polarization, b.polarization,
                                          a.detection_time() - b.detection_time(), cfg, emitter);
  law.p_coincidence = t * t + r * r - 2.0 * t * r * law.envelope_ratio * law.dephasing_factor;
  return law;
}

PairOutcome pair_interference_outcome(const RoutedPhoton& a, const RoutedPhoton& b,
                                      const InterferometerConfig& cfg,
                                      const EmitterParams& emitter, Rng& rng) {
  if (a.arm == b.arm)
    throw InvalidInput("pair_interference_outcome: photons must come from opposite arms");
  if (std::abs(a.arrival_time - b.arrival_time) > cfg.window_for(emitter))
    throw InvalidInput("pair_interference_outcome: arrivals further apart than pairing window");

  const RoutedPhoton& s = a.arm == Arm::short_arm ? a : b;
  const RoutedPhoton& l = a.arm == Arm::short_arm ? b : a;
  const double ts = s.detection_time();
  const double tl = l.detection_time();
  const double t = cfg.bs.transmission();
  const double r = cfg.bs.reflection();
  const PairLaw law = coincidence_law(s, l, cfg, emitter);
  const double rd = law.envelope_ratio * law.dephasing_factor;

  // Weight of "short photon's envelope at ts, long at tl" versus the swapped
  // assignment; the two are equal whenever the envelopes are indistinguishable.
  double x = 1.0;
  if (law.envelope_ratio > 0.0) {
    const double log_ratio =
        -0.5 * emitter.gamma_spon * ((ts - s.arrival_time) + (tl - l.arrival_time)) +
        0.5 * emitter.gamma_spon * ((tl - s.arrival_time) + (ts - l.arrival_time));
    x = 1.0 / (1.0 + std::exp(-2.0 * log_ratio));
  }
  const double y = 1.0 - x;
  const double p_3s_4l = t * t * x + r * r * y - t * r * rd;
  const double p_4s_3l = r * r * x + t * t * y - t * r * rd;
  const double p_bunch = t * r * (1.0 + rd);

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double draw = uniform(rng);
  Channel at_s;
  Channel at_l;
  bool coincidence = true;
  if (draw < p_3s_4l) {
    at_s = Channel::three;
    at_l = Channel::four;
  } else if (draw < p_3s_4l + p_4s_3l) {
    at_s = Channel::four;
    at_l = Channel::three;
  } else {
    coincidence = false;
    at_s = at_l = draw < p_3s_4l + p_4s_3l + p_bunch ? Channel::three : Channel::four;
  }

  PairOutcome out;
  out.coincidence = coincidence;
  out.p_coincidence = law.p_coincidence;
  const DetectionEvent click_s{at_s, ts};
  const DetectionEvent click_l{at_l, tl};
  out.clicks = &a == &s ? std::array{click_s, click_l} : std::array{click_l, click_s};
  return out;
}

DetectionEvent route_unpaired(const RoutedPhoton& p, const InterferometerConfig& cfg, Rng& rng) {
  std::bernoulli_distribution to3(p_detector3(p.arm, cfg.bs));
  return {to3(rng) ? Channel::three : Channel::four, p.detection_time()};
}

namespace {

std::vector<DetectionEvent> assign_independent(std::span<const RoutedPhoton> routed,
                                               const InterferometerConfig& cfg, Rng& rng) {
  std::vector<DetectionEvent> out;
  out.reserve(routed.size());
  for (const RoutedPhoton& p : routed) out.push_back(route_unpaired(p, cfg, rng));
  return out;
}

std::vector<DetectionEvent> assign_greedy(std::span<const RoutedPhoton> routed,
                                          const InterferometerConfig& cfg,
                                          const EmitterParams& emitter, Rng& rng,
                                          LabelStats& stats) {
  const double window = cfg.window_for(emitter);
  struct Candidate {
    double gap;
    std::size_t first;
    std::size_t second;
  };
  std::vector<Candidate> candidates;
  // routed is sorted by arrival, so a forward scan finds every pair in the window.
  for (std::size_t i = 0; i < routed.size(); ++i) {
    for (std::size_t j = i + 1; j < routed.size(); ++j) {
      const double gap = routed[j].arrival_time - routed[i].arrival_time;
      if (gap > window) break;
      if (routed[i].arm != routed[j].arm) candidates.push_back({gap, i, j});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.gap < b.gap; });

  std::vector<std::size_t> partner(routed.size(), routed.size());
  for (const Candidate& c : candidates) {
    if (partner[c.first] != routed.size() || partner[c.second] != routed.size()) continue;
    partner[c.first] = c.second;
    partner[c.second] = c.first;
    ++stats.pairs;
  }

  std::vector<DetectionEvent> out;
  out.reserve(routed.size());
  for (std::size_t i = 0; i < routed.size(); ++i) {
    if (partner[i] == routed.size()) {
      out.push_back(route_unpaired(routed[i], cfg, rng));
    } else if (partner[i] > i) {
      const PairOutcome o = pair_interference_outcome(routed[i], routed[partner[i]], cfg, emitter,
                                                       rng);
      out.push_back(o.clicks[0]);
      out.push_back(o.clicks[1]);
    }
  }
  return out;
}

struct LabelledClick {
  double time;
  double arrival;
  Arm arm;
  PolarizationAxis axis;
  double mean;
  double spin = 0.0;  // +1 detector 3, -1 detector 4
};

// Target covariance of the two spins: sin^2(2 theta) R D for opposite arms.
double target_covariance(const LabelledClick& a, const LabelledClick& b, double variance,
                         const InterferometerConfig& cfg, const EmitterParams& emitter) {
  if (a.arm == b.arm) return 0.0;
  const double d = dephasing_factor(a.axis, b.axis, a.time - b.time, cfg, emitter);
  if (d < kInterferenceCutoff) return 0.0;
  const double r = envelope_ratio(a.time, b.time, a.arrival, b.arrival, emitter.gamma_spon);
  const double k = variance * r * d;
  return k < kInterferenceCutoff ? 0.0 : k;
}

std::vector<DetectionEvent> assign_correlated(std::span<const RoutedPhoton> routed,
                                              const InterferometerConfig& cfg,
                                              const EmitterParams& emitter, Rng& rng,
                                              LabelStats& stats) {
  const double t = cfg.bs.transmission();
  const double r = cfg.bs.reflection();
  const double variance = 4.0 * t * r;
  const double horizon = cfg.window_for(emitter);

  std::vector<LabelledClick> clicks;
  clicks.reserve(routed.size());
  for (const RoutedPhoton& p : routed) {
    clicks.push_back({p.detection_time(), p.arrival_time, p.arm, p.polarization,
                      bernoulli_mean(p.arm, cfg.bs)});
  }
  std::stable_sort(clicks.begin(), clicks.end(),
                   [](const LabelledClick& a, const LabelledClick& b) { return a.time < b.time; });

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::size_t> cluster;
  std::vector<char> in_cluster;
  ClusterMatrix cov;
  ClusterVector target;
  std::size_t first = 0;

  for (std::size_t n = 0; n < clicks.size(); ++n) {
    LabelledClick& current = clicks[n];
    while (clicks[first].time < current.time - horizon) ++first;

    cluster.clear();
    if (variance > 0.0) {
      for (std::size_t j = first; j < n; ++j) {
        if (target_covariance(clicks[j], current, variance, cfg, emitter) > 0.0)
          cluster.push_back(j);
      }
    }

    double p3 = 0.5 * (1.0 + current.mean);
    if (!cluster.empty()) {
      // Close the set over past clicks that covary with any member, so every
      // click left out is uncorrelated with the whole cluster.
      in_cluster.assign(n - first, 0);
      for (std::size_t j : cluster) in_cluster[j - first] = 1;
      for (std::size_t q = 0; q < cluster.size() && cluster.size() < kMaxCluster; ++q) {
        for (std::size_t l = first; l < n && cluster.size() < kMaxCluster; ++l) {
          if (in_cluster[l - first]) continue;
          if (target_covariance(clicks[cluster[q]], clicks[l], variance, cfg, emitter) > 0.0) {
            in_cluster[l - first] = 1;
            cluster.push_back(l);
          }
        }
      }

      const auto size = static_cast<Eigen::Index>(cluster.size());
      cov.resize(size, size);
      target.resize(size);
      for (Eigen::Index a = 0; a < size; ++a) {
        cov(a, a) = variance;
        target[a] = target_covariance(clicks[cluster[a]], current, variance, cfg, emitter);
        for (Eigen::Index b = a + 1; b < size; ++b) {
          cov(a, b) = cov(b, a) =
              target_covariance(clicks[cluster[a]], clicks[cluster[b]], variance, cfg, emitter);
        }
      }
      const Eigen::LDLT<ClusterMatrix> ldlt(cov);
      ClusterVector weights = ldlt.solve(target);
      if (ldlt.info() != Eigen::Success || !weights.allFinite()) {
        weights = cov.completeOrthogonalDecomposition().solve(target);
      }
      double shift = 0.0;
      for (Eigen::Index a = 0; a < size; ++a) {
        const LabelledClick& c = clicks[cluster[a]];
        shift += weights[a] * (c.spin - c.mean);
      }
      p3 = 0.5 * (1.0 + current.mean + shift);
      ++stats.conditioned;
      stats.largest_cluster = std::max(stats.largest_cluster, cluster.size());
      if (p3 < 0.0 || p3 > 1.0) {
        ++stats.clipped;
        p3 = std::clamp(p3, 0.0, 1.0);
      }
    }
    current.spin = uniform(rng) < p3 ? 1.0 : -1.0;
  }

  std::vector<DetectionEvent> out;
  out.reserve(clicks.size());
  for (const LabelledClick& c : clicks)
    out.push_back({c.spin > 0.0 ? Channel::three : Channel::four, c.time});
  return out;
}

}  // namespace

std::vector<DetectionEvent> assign_detectors(std::span<const RoutedPhoton> routed,
                                             const InterferometerConfig& cfg,
                                             const EmitterParams& emitter, Rng& rng,
                                             LabelStats* stats) {
  cfg.validate();
  emitter.validate();
  LabelStats local;
  local.photons = routed.size();
  std::vector<DetectionEvent> out;
  switch (cfg.pairing) {
    case PairingRule::none: out = assign_independent(routed, cfg, rng); break;
    case PairingRule::greedy: out = assign_greedy(routed, cfg, emitter, rng, local); break;
    case PairingRule::correlated: out = assign_correlated(routed, cfg, emitter, rng, local); break;
  }
  std::stable_sort(out.begin(), out.end(), earlier);
  if (stats) *stats += local;
  return out;
}

}  // namespace hom
