#include "hom/emitter.hpp"

#include "hom/random.hpp"

#include <algorithm>
#include <cmath>

namespace hom {

void StreamConfig::validate() const {
  if (!std::isfinite(duration) || !(duration > 0.0))
    throw InvalidInput("stream duration must be finite and > 0");
  emitter.validate();
}

double mean_emission_rate(const EmitterParams& p) {
  double mean_wait = 1.0 / p.w_p + 1.0 / p.gamma_spon;
  if (p.gamma_vib) mean_wait += 1.0 / *p.gamma_vib;
  return 1.0 / mean_wait;
}

namespace {

// Sum of `k` independent Exp(rate) variates.
double erlang(Rng& rng, std::uint64_t k, double rate) {
  if (k == 0) return 0.0;
  if (k == 1) return std::exponential_distribution<double>(rate)(rng);
  return std::gamma_distribution<double>(static_cast<double>(k), 1.0 / rate)(rng);
}

std::vector<PhotonEvent> full_stream(const StreamConfig& cfg, Rng& rng) {
  const EmitterParams& p = cfg.emitter;
  std::exponential_distribution<double> pump(p.w_p);
  std::exponential_distribution<double> decay(p.gamma_spon);
  std::exponential_distribution<double> relax(p.gamma_vib.value_or(1.0));

  std::vector<PhotonEvent> out;
  out.reserve(static_cast<std::size_t>(cfg.duration * mean_emission_rate(p) * 1.05) + 16);
  double t = 0.0;  // emitter in the ground state at t = 0
  for (std::uint64_t id = 0;; ++id) {
    t += pump(rng);
    if (p.gamma_vib) t += relax(rng);
    if (t >= cfg.duration) break;
    const double delay = decay(rng);
    out.push_back({id, t, delay});
    t += delay;
  }
  return out;
}

std::vector<PhotonEvent> thinned_stream(const StreamConfig& cfg, double keep, Rng& rng) {
  const EmitterParams& p = cfg.emitter;
  std::geometric_distribution<std::uint64_t> skip(keep);
  std::exponential_distribution<double> decay(p.gamma_spon);

  std::vector<PhotonEvent> out;
  out.reserve(static_cast<std::size_t>(cfg.duration * mean_emission_rate(p) * keep * 1.05) + 16);
  double ground = 0.0;     // time the emitter last returned to the ground state
  std::uint64_t next = 0;  // id of the next photon of the full stream
  for (;;) {
    // k photons of the full stream pass until the next survivor (inclusive).
    const std::uint64_t k = skip(rng) + 1;
    double t0 = ground + erlang(rng, k, p.w_p) + erlang(rng, k - 1, p.gamma_spon);
    if (p.gamma_vib) t0 += erlang(rng, k, *p.gamma_vib);
    if (t0 >= cfg.duration) break;
    next += k;
    const double delay = decay(rng);
    out.push_back({next - 1, t0, delay});
    ground = t0 + delay;
  }
  return out;
}

}  // namespace

std::vector<PhotonEvent> simulate_emission_stream(const StreamConfig& cfg,
                                                  double keep_probability) {
  cfg.validate();
  if (!(keep_probability > 0.0 && keep_probability <= 1.0))
    throw InvalidInput("keep_probability must lie in (0, 1]");
  Rng rng = make_rng(cfg.rng_seed, RngStream::emitter);
  if (keep_probability == 1.0) return full_stream(cfg, rng);
  return thinned_stream(cfg, keep_probability, rng);
}

CorrelationHistogram empirical_g2(std::span<const double> times, double bin_width,
                                  double max_tau) {
  if (!(max_tau > 0.0)) throw InvalidInput("empirical_g2: max_tau must be > 0");
  if (!std::is_sorted(times.begin(), times.end()))
    throw InvalidInput("empirical_g2: stream is not sorted");
  CorrelationHistogram hist = CorrelationHistogram::centered(bin_width, max_tau);

  // the outermost bins extend half a bin beyond max_tau
  const double reach = hist.bin_centers[hist.size() - 1] + 0.5 * hist.bin_width;
  const std::size_t n = times.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = times[j] - times[i];
      if (d >= reach) break;
      const Eigen::Index up = hist.bin_index(d);
      const Eigen::Index down = hist.bin_index(-d);
      if (up >= 0) ++hist.counts[up];
      if (down >= 0) ++hist.counts[down];
    }
  }

  const double span = n >= 2 ? times[n - 1] - times[0] : 0.0;
  if (span > 0.0) {
    const double rate = static_cast<double>(n) / span;
    hist.normalization_constant = rate * rate * span * bin_width;
    const Eigen::ArrayXd expected =
        rate * rate * bin_width * (span - hist.bin_centers.abs()).max(0.0);
    hist.normalized = (expected > 0.0).select(hist.counts.cast<double>() / expected, 0.0);
  } else {
    hist.normalized = Eigen::ArrayXd::Zero(hist.size());
  }
  return hist;
}

CorrelationHistogram empirical_g2(std::span<const PhotonEvent> stream, double bin_width,
                                  double max_tau) {
  std::vector<double> times(stream.size());
  std::transform(stream.begin(), stream.end(), times.begin(),
                 [](const PhotonEvent& e) { return e.emission_time; });
  return empirical_g2(std::span<const double>(times), bin_width, max_tau);
}

}  // namespace hom
