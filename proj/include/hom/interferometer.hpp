#ifndef HOM_INTERFEROMETER_HPP
#define HOM_INTERFEROMETER_HPP

#include "hom/coherence.hpp"
#include "hom/emitter.hpp"
#include "hom/events.hpp"
#include "hom/random.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hom {

enum class Arm : std::uint8_t { short_arm, long_arm };
enum class PolarizationAxis : std::uint8_t { horizontal, vertical };

/// How photons from opposite arms are made to interfere at the beam splitter.
enum class PairingRule {
  /// Every opposite-arm pair gets its exact two-photon coincidence law; detector
  /// labels are drawn sequentially with linear conditional probabilities that
  /// reproduce all pairwise laws at once.
  correlated,
  /// Greedy nearest-arrival one-to-one matching; matched pairs use
  /// pair_interference_outcome, the rest route independently.
  greedy,
  /// No interference: every photon routes independently.
  none,
};

std::string to_string(PairingRule rule);
PairingRule parse_pairing_rule(const std::string& text);

struct InterferometerConfig {
  double delta_t = 4.6;
  BeamSplitterConfig bs;
  PolarizationMode pol = PolarizationMode::parallel;
  double arm_prob_long = 0.5;
  /// Interference horizon in ns; defaults to 10 / gamma_spon.
  std::optional<double> pairing_window;
  PairingRule pairing = PairingRule::correlated;

  double window_for(const EmitterParams& p) const {
    return pairing_window.value_or(10.0 / p.gamma_spon);
  }
  void validate() const;
};

struct RoutedPhoton {
  std::uint64_t photon_id = 0;
  double arrival_time = 0.0;
  double decay_delay = 0.0;
  Arm arm = Arm::short_arm;
  PolarizationAxis polarization = PolarizationAxis::horizontal;

  double detection_time() const { return arrival_time + decay_delay; }
};

/// Sends each photon to the long arm with probability arm_prob_long; long-arm
/// arrivals are delayed by exactly delta_t and carry the rotated axis in
/// orthogonal mode. Output sorted by arrival time.
std::vector<RoutedPhoton> route(std::span<const PhotonEvent> stream,
                                const InterferometerConfig& cfg, Rng& rng);

/// Ratio R = 2 Ea(u)Eb(v)Ea(v)Eb(u) / (Ea(u)^2 Eb(v)^2 + Ea(v)^2 Eb(u)^2) of the
/// exponential envelopes Ex(t) = sqrt(G) exp(-G (t - arrival_x)/2) [t >= arrival_x].
double envelope_ratio(double u, double v, double arrival_a, double arrival_b, double gamma_spon);

struct PairLaw {
  double p_coincidence = 0.0;
  double envelope_ratio = 0.0;
  /// M exp(-2 gamma_pure |u - v|) for matching polarizations, 0 otherwise.
  double dephasing_factor = 0.0;
};

/// Coincidence probability of a short-arm/long-arm pair detected at their own
/// detection times: cos^4 + sin^4 - 2 sin^2 cos^2 R D.
PairLaw coincidence_law(const RoutedPhoton& a, const RoutedPhoton& b,
                        const InterferometerConfig& cfg, const EmitterParams& emitter);

struct PairOutcome {
  bool coincidence = false;
  std::array<DetectionEvent, 2> clicks;
  double p_coincidence = 0.0;
};

/// Samples the joint detector assignment of one interfering pair. Throws
/// InvalidInput for same-arm photons or arrivals further apart than the
/// pairing window.
PairOutcome pair_interference_outcome(const RoutedPhoton& a, const RoutedPhoton& b,
                                      const InterferometerConfig& cfg,
                                      const EmitterParams& emitter, Rng& rng);

/// Single-photon routing: short arm to detector 3 with probability cos^2(theta),
/// long arm with probability sin^2(theta).
DetectionEvent route_unpaired(const RoutedPhoton& p, const InterferometerConfig& cfg, Rng& rng);

struct LabelStats {
  std::size_t photons = 0;
  /// Photons whose label was conditioned on an interfering partner.
  std::size_t conditioned = 0;
  /// Conditional probabilities that had to be clipped into [0, 1].
  std::size_t clipped = 0;
  /// Pairs formed by the greedy rule.
  std::size_t pairs = 0;
  std::size_t largest_cluster = 0;

  LabelStats& operator+=(const LabelStats& o);
};

/// Assigns every routed photon a detector and detection time according to
/// cfg.pairing. Output sorted by time.
std::vector<DetectionEvent> assign_detectors(std::span<const RoutedPhoton> routed,
                                             const InterferometerConfig& cfg,
                                             const EmitterParams& emitter, Rng& rng,
                                             LabelStats* stats = nullptr);

}  // namespace hom

#endif  // HOM_INTERFEROMETER_HPP
