#ifndef HOM_ANALYSIS_HPP
#define HOM_ANALYSIS_HPP

#include "hom/coherence.hpp"
#include "hom/detection.hpp"
#include "hom/histogram.hpp"
#include "hom/optimize.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>

namespace hom {

/// Normalized difference (g_orth - g_par) / g_orth with a Poisson error bar.
struct DifferenceCurve {
  Eigen::ArrayXd tau;
  Eigen::ArrayXd value;
  Eigen::ArrayXd sigma;
  /// False where g_orth is zero; value and sigma are NaN there.
  Eigen::Array<bool, Eigen::Dynamic, 1> defined;

  Eigen::Index size() const { return tau.size(); }
};

/// Both histograms must be normalized and share bin geometry. The per-bin
/// error of a normalized value is sqrt(max(counts, 1)) / normalization_constant.
DifferenceCurve difference_curve(const CorrelationHistogram& h_orth,
                                 const CorrelationHistogram& h_par);

/// Mean normalized value over bins with |tau| <= window/2 in each histogram,
/// then (orth - par) / orth.
double v0_from_histograms(const CorrelationHistogram& h_par, const CorrelationHistogram& h_orth,
                          double window);

struct FitParameters {
  double gamma_pure = 0.2;
  double w_p = 8.0;
  double mode_match = 0.7;
  /// Fraction of flat coincidences in the normalized curves.
  double background = 0.1;

  Eigen::Vector4d as_vector() const { return {gamma_pure, w_p, mode_match, background}; }
  static FitParameters from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct FitOptions {
  double theta = std::numbers::pi / 4.0;
  /// Bins with |tau| above this are ignored by the objective.
  double fit_window = 2.3;
  /// Width used for v0_hat; defaults to the pair IRF FWHM (or one bin if that is zero).
  std::optional<double> v0_window;
  int restarts = 3;
  std::uint64_t seed = 1;
  /// Sub-samples per bin when averaging the model over a bin.
  int oversample = 5;
  NelderMeadOptions optimizer;
};

struct ModelCurves {
  Eigen::ArrayXd parallel;
  Eigen::ArrayXd orthogonal;
};

/// As-measured normalized curves, bin-averaged: the analytic g2_34 curves
/// convolved with the pair IRF, mixed with a flat background fraction.
ModelCurves hom_model(const Eigen::ArrayXd& bin_centers, double bin_width,
                      const FitParameters& params, double gamma_spon, double theta,
                      double irf_fwhm, int oversample = 5);

struct HomFitResult {
  double gamma_spon = 0.0;
  double gamma_pure_hat = 0.0;
  double w_p_hat = 0.0;
  double contrast_hat = 0.0;
  double background_hat = 0.0;
  double t2_hat = 0.0;
  /// Visibility of the fitted as-measured model over the v0 window.
  double v0_hat = 0.0;
  /// Visibility of the fitted model without IRF or background, 2 M s(theta).
  double v0_intrinsic = 0.0;
  /// Standard errors of gamma_pure, w_p, contrast, background (NaN if the
  /// curvature matrix is not positive definite).
  std::array<double, 4> stderr_values{};
  double rss = 0.0;
  int bins_used = 0;
  int evaluations = 0;
  bool converged = false;
  /// False when a fitted rate is negative or M falls outside [0, 1].
  bool physical = false;
};

/// Joint Poisson-weighted least-squares fit of both normalized histograms.
/// Nelder-Mead from `init` plus options.restarts jittered starts; the best point wins.
HomFitResult fit_hom_model(const CorrelationHistogram& h_par, const CorrelationHistogram& h_orth,
                           double gamma_spon, const DetectionConfig& det,
                           const FitParameters& init, const FitOptions& options = {});

}  // namespace hom

#endif  // HOM_ANALYSIS_HPP
