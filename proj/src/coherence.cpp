#include "hom/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hom {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void EmitterParams::validate() const {
  if (!finite_positive(gamma_spon)) throw InvalidInput("gamma_spon must be finite and > 0");
  if (!std::isfinite(gamma_pure) || gamma_pure < 0.0)
    throw InvalidInput("gamma_pure must be finite and >= 0");
  if (!finite_positive(w_p)) throw InvalidInput("w_p must be finite and > 0");
  if (gamma_vib && !finite_positive(*gamma_vib))
    throw InvalidInput("gamma_vib must be finite and > 0 (or instantaneous)");
}

void BeamSplitterConfig::validate() const {
  if (!std::isfinite(theta) || theta < 0.0 || theta > std::numbers::pi / 2.0)
    throw InvalidInput("theta must lie in [0, pi/2]");
  if (!std::isfinite(mode_match) || mode_match < 0.0 || mode_match > 1.0)
    throw InvalidInput("mode_match must lie in [0, 1]");
}

std::string to_string(PolarizationMode mode) {
  return mode == PolarizationMode::parallel ? "parallel" : "orthogonal";
}

PolarizationMode parse_polarization_mode(const std::string& text) {
  if (text == "parallel") return PolarizationMode::parallel;
  if (text == "orthogonal") return PolarizationMode::orthogonal;
  throw InvalidInput("polarization must be 'parallel' or 'orthogonal', got '" + text + "'");
}

double overlap_sq(double delta_t, const EmitterParams& p) {
  if (!(delta_t >= 0.0)) throw InvalidInput("overlap_sq: delta_t must be >= 0");
  return std::exp(-2.0 * p.total_dephasing() * delta_t);
}

double visibility(double g2_orth_0, double g2_par_0) {
  if (!(g2_orth_0 > 0.0)) throw InvalidInput("visibility: g2_orth(0) must be > 0");
  return (g2_orth_0 - g2_par_0) / g2_orth_0;
}

Eigen::ArrayXd convolve_irf(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& curve, double fwhm) {
  if (tau.size() != curve.size()) throw InvalidInput("convolve_irf: tau/curve size mismatch");
  if (!(fwhm >= 0.0)) throw InvalidInput("convolve_irf: fwhm must be >= 0");
  const Eigen::Index n = tau.size();
  if (fwhm == 0.0 || n < 2) return curve;

  const double step = (tau[n - 1] - tau[0]) / static_cast<double>(n - 1);
  if (!(step > 0.0)) throw InvalidInput("convolve_irf: tau must be increasing");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs((tau[i] - tau[i - 1]) - step) > 1e-6 * step)
      throw InvalidInput("convolve_irf: sampling is not uniform");
  }
  if (step > fwhm / 4.0) throw InvalidInput("convolve_irf: sampling step exceeds fwhm/4");

  const double sigma = fwhm_to_sigma(fwhm);
  const auto half = static_cast<Eigen::Index>(std::ceil(5.0 * sigma / step));
  Eigen::ArrayXd kernel(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    const double x = static_cast<double>(k) * step / sigma;
    kernel[k + half] = std::exp(-0.5 * x * x);
  }
  kernel /= kernel.sum();

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index k = -half; k <= half; ++k) {
      const Eigen::Index j = std::clamp<Eigen::Index>(i - k, 0, n - 1);
      acc += kernel[k + half] * curve[j];
    }
    out[i] = acc;
  }
  return out;
}

double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  const double inv2 = 1.0 / (x * x);
  const double series = 1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2;
  return series / (x * std::sqrt(std::numbers::pi));
}

double gaussian_smeared_decay(double t, double rate, double sigma) {
  if (sigma <= 0.0) return std::exp(-rate * std::abs(t));
  const double root2_sigma = std::numbers::sqrt2 * sigma;
  const double gauss = std::exp(-0.5 * (t / sigma) * (t / sigma));
  // One branch per sign of t: exp(a^2 s^2/2 -+ a t) erfc((a s^2 -+ t)/(sqrt2 s)).
  auto branch = [&](double signed_t) {
    const double x = (rate * sigma * sigma - signed_t) / root2_sigma;
    if (x >= 0.0) return gauss * erfcx(x);
    return std::exp(rate * (0.5 * rate * sigma * sigma - signed_t)) * std::erfc(x);
  };
  return 0.5 * (branch(t) + branch(-t));
}

}  // namespace hom
