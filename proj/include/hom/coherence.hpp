#ifndef HOM_COHERENCE_HPP
#define HOM_COHERENCE_HPP

// Closed-form coherence functions of a dephasing three-level emitter and the
// two-port coincidence curves behind a beam splitter. Every function accepts
// either a scalar delay or an Eigen array of delays; the array forms return
// Eigen expressions so they compose without temporaries.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace hom {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rates of the incoherently pumped emitter, all in 1/ns.
struct EmitterParams {
  double gamma_spon = 1.0 / 3.4;
  double gamma_pure = 0.2;
  double w_p = 8.0;
  /// Vibronic relaxation rate; empty means instantaneous relaxation.
  std::optional<double> gamma_vib;

  /// Total dephasing rate of the zero-phonon line, gamma_spon/2 + gamma_pure.
  double total_dephasing() const { return 0.5 * gamma_spon + gamma_pure; }
  /// Coherence time T2 = 1/total_dephasing().
  double t2() const { return 1.0 / total_dephasing(); }

  void validate() const;
};

enum class PolarizationMode { parallel, orthogonal };

std::string to_string(PolarizationMode mode);
PolarizationMode parse_polarization_mode(const std::string& text);

/// Recombining beam splitter. Transmission is cos^2(theta); reflection is
/// defined as 1 - transmission so the pair sums to one exactly.
struct BeamSplitterConfig {
  double theta = std::numbers::pi / 4.0;
  /// Mode-match factor M scaling the two-photon interference term.
  double mode_match = 0.7;

  double transmission() const {
    const double c = std::cos(theta);
    return c * c;
  }
  double reflection() const { return 1.0 - transmission(); }

  /// sin^2 cos^2 / (cos^4 + sin^4): weight of |g1|^2 in the parallel curve.
  double interference_coefficient() const {
    const double t = transmission();
    const double r = reflection();
    return t * r / (t * t + r * r);
  }

  void validate() const;
};

/// Anything that is not an Eigen expression; routes scalars away from the array overloads.
template <typename T>
concept ScalarLike = !std::is_base_of_v<Eigen::EigenBase<T>, T>;

// Scalar forms. Delays in ns, evaluated on |tau|.

template <ScalarLike Scalar>
Scalar g1(Scalar tau, const EmitterParams& p) {
  using std::abs;
  using std::exp;
  return exp(-Scalar(p.total_dephasing()) * abs(tau));
}

/// Intensity correlation of the source, 1 - exp(-(W_P + gamma_spon)|tau|).
template <ScalarLike Scalar>
Scalar g2_source(Scalar tau, const EmitterParams& p) {
  using std::abs;
  using std::expm1;
  return -expm1(-Scalar(p.w_p + p.gamma_spon) * abs(tau));
}

template <ScalarLike Scalar>
Scalar g2_34(Scalar tau, const EmitterParams& p, const BeamSplitterConfig& bs,
             PolarizationMode pol) {
  const Scalar orth = Scalar(0.5) * (g2_source(tau, p) + Scalar(1));
  if (pol == PolarizationMode::orthogonal) return orth;
  const Scalar coherence = g1(tau, p);
  return orth - Scalar(bs.mode_match * bs.interference_coefficient()) * coherence * coherence;
}

// Array forms.

template <typename Derived>
auto g1(const Eigen::ArrayBase<Derived>& tau, const EmitterParams& p) {
  using Scalar = typename Derived::Scalar;
  return (-Scalar(p.total_dephasing()) * tau.abs()).exp();
}

template <typename Derived>
auto g2_source(const Eigen::ArrayBase<Derived>& tau, const EmitterParams& p) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) - (-Scalar(p.w_p + p.gamma_spon) * tau.abs()).exp();
}

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> g2_34(
    const Eigen::ArrayBase<Derived>& tau, const EmitterParams& p, const BeamSplitterConfig& bs,
    PolarizationMode pol) {
  using Scalar = typename Derived::Scalar;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out = Scalar(0.5) * (g2_source(tau, p) + Scalar(1));
  if (pol == PolarizationMode::parallel) {
    out -= Scalar(bs.mode_match * bs.interference_coefficient()) *
           (-Scalar(2.0 * p.total_dephasing()) * tau.abs()).exp();
  }
  return out;
}

/// |<psi_t0|psi_t0-dt>|^2 = exp(-2 gamma dt). Throws on negative delay.
double overlap_sq(double delta_t, const EmitterParams& p);

/// Coincidence reduction factor (g_orth(0) - g_par(0)) / g_orth(0).
double visibility(double g2_orth_0, double g2_par_0);

/// Gaussian FWHM to standard deviation.
inline double fwhm_to_sigma(double fwhm) {
  return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

/// Convolves a uniformly sampled curve with a unit-area Gaussian of the given
/// FWHM, truncated at +-5 sigma and renormalized. Samples outside the curve are
/// treated as the nearest edge value. fwhm == 0 returns the input.
Eigen::ArrayXd convolve_irf(const Eigen::ArrayXd& tau, const Eigen::ArrayXd& curve, double fwhm);

/// exp(x^2) erfc(x), stable for large positive x.
double erfcx(double x);

/// Closed-form convolution of exp(-rate |t|) with a zero-mean Gaussian of
/// standard deviation sigma, evaluated at t. sigma == 0 gives exp(-rate |t|).
double gaussian_smeared_decay(double t, double rate, double sigma);

}  // namespace hom

#endif  // HOM_COHERENCE_HPP
