#ifndef HOM_EMITTER_HPP
#define HOM_EMITTER_HPP

#include "hom/coherence.hpp"
#include "hom/histogram.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hom {

/// One emitted photon. `emission_time` is the start t0 of the wavepacket (the
/// instant the emitting level is populated); `decay_delay` is the sampled
/// spontaneous-emission delay, so the photon is detected at t0 + decay_delay.
struct PhotonEvent {
  std::uint64_t photon_id = 0;
  double emission_time = 0.0;
  double decay_delay = 0.0;

  double detection_offset_time() const { return emission_time + decay_delay; }
  bool operator==(const PhotonEvent&) const = default;
};

struct StreamConfig {
  double duration = 1e6;
  std::uint64_t rng_seed = 1;
  EmitterParams emitter;

  void validate() const;
};

/// Renewal photon stream of the incoherently pumped emitter: the time between
/// successive wavepacket starts is Exp(gamma_spon) [decay of the previous
/// photon] + Exp(w_p) [pump] + Exp(gamma_vib) [relaxation, absent when
/// instantaneous]. Only photons with emission_time < duration are returned.
///
/// With keep_probability < 1 the stream is independently thinned and only the
/// survivors are generated; photon ids stay ordinals of the full stream. The
/// skipped photons are summed analytically as gamma variates, so the cost is
/// proportional to the number of survivors.
std::vector<PhotonEvent> simulate_emission_stream(const StreamConfig& cfg,
                                                  double keep_probability = 1.0);

/// Brute-force pair-correlation estimate over the wavepacket start times:
/// every ordered pair with |delay| < max_tau is binned (zero-centred bins), and
/// values are normalized by rate^2 (T - |tau|) bin_width with rate = N / T and
/// T the span of the stream. Throws on an unsorted stream.
CorrelationHistogram empirical_g2(std::span<const PhotonEvent> stream, double bin_width,
                                  double max_tau);

/// Same estimator for raw times.
CorrelationHistogram empirical_g2(std::span<const double> times, double bin_width,
                                  double max_tau);

/// Mean rate of the stream, w_p gamma_spon / (w_p + gamma_spon) for instantaneous
/// relaxation (inverse of the mean waiting time in general).
double mean_emission_rate(const EmitterParams& p);

}  // namespace hom

#endif  // HOM_EMITTER_HPP
