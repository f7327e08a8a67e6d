#ifndef HOM_HISTOGRAM_HPP
#define HOM_HISTOGRAM_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>

namespace hom {

using CountArray = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;

/// Binned delay counts. Bin i covers [tau_min + i*w, tau_min + (i+1)*w).
struct CorrelationHistogram {
  Eigen::ArrayXd bin_centers;
  double bin_width = 0.0;
  CountArray counts;
  /// Present only after normalization.
  std::optional<Eigen::ArrayXd> normalized;
  /// Counts per bin corresponding to a normalized value of one.
  double normalization_constant = 0.0;
  /// Decay rate (1/ns) of the start-stop baseline removed by normalize_start_stop();
  /// zero for a flat baseline.
  double baseline_slope = 0.0;
  /// Set by rebin() when trailing bins had to be dropped.
  bool truncated = false;

  static CorrelationHistogram uniform(double tau_min, double bin_width, Eigen::Index bins);
  /// Uniform bins over [-max_tau, max_tau] with one bin centred on zero.
  static CorrelationHistogram centered(double bin_width, double max_tau);

  Eigen::Index size() const { return counts.size(); }
  double tau_min() const { return bin_centers[0] - 0.5 * bin_width; }
  double tau_max() const { return tau_min() + bin_width * static_cast<double>(size()); }
  /// Bin holding tau, or -1 when tau is outside the range.
  Eigen::Index bin_index(double tau) const;
  std::int64_t total() const { return counts.sum(); }
  bool same_geometry(const CorrelationHistogram& other) const;
  /// Expected counts per bin at a normalized value of one.
  Eigen::ArrayXd baseline() const {
    return normalization_constant * (-baseline_slope * bin_centers).exp();
  }

  /// Adds the counts of a histogram with identical geometry. Drops normalization.
  void merge(const CorrelationHistogram& other);
};

/// Symmetric |tau| interval used to normalize by the large-delay level.
struct NormRegion {
  double abs_min = 15.0;
  double abs_max = 28.0;
};

/// Divides counts by their mean over the bins whose centres fall in the region.
CorrelationHistogram normalize(const CorrelationHistogram& hist, const NormRegion& region);

/// Like normalize(), but first removes the exp(-s tau) baseline that single-stop
/// start-stop recording imposes at finite count rates. s is estimated from the
/// ratio of the negative- and positive-delay halves of the region.
CorrelationHistogram normalize_start_stop(const CorrelationHistogram& hist, const NormRegion& region);
/// Checks the region lies inside the histogram and clear of |tau| < 3/gamma_spon
/// and of tau = +-delta_t by the same 3/gamma_spon margin.
void check_norm_region(const CorrelationHistogram& hist, const NormRegion& region,
                       double gamma_spon, double delta_t);

/// Sums counts in groups of `factor`; a trailing partial group is dropped and
/// flagged. Normalization, if present, is carried over.
CorrelationHistogram rebin(const CorrelationHistogram& hist, int factor);

/// Sums histograms of identical geometry.
CorrelationHistogram merge(const CorrelationHistogram& a, const CorrelationHistogram& b);

}  // namespace hom

#endif  // HOM_HISTOGRAM_HPP
