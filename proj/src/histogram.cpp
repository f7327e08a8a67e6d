#include "hom/histogram.hpp"

#include "hom/coherence.hpp"

#include <algorithm>
#include <cmath>

namespace hom {

CorrelationHistogram CorrelationHistogram::uniform(double tau_min, double bin_width,
                                                   Eigen::Index bins) {
  if (!(bin_width > 0.0)) throw InvalidInput("histogram bin width must be > 0");
  if (bins < 1) throw InvalidInput("histogram needs at least one bin");
  CorrelationHistogram h;
  h.bin_width = bin_width;
  h.bin_centers = tau_min + bin_width * (Eigen::ArrayXd::LinSpaced(bins, 0.0,
                                                                    static_cast<double>(bins - 1)) +
                                         0.5);
  h.counts = CountArray::Zero(bins);
  return h;
}

CorrelationHistogram CorrelationHistogram::centered(double bin_width, double max_tau) {
  if (!(bin_width > 0.0)) throw InvalidInput("histogram bin width must be > 0");
  const auto half = static_cast<Eigen::Index>(std::ceil(max_tau / bin_width - 0.5));
  const Eigen::Index bins = 2 * std::max<Eigen::Index>(half, 0) + 1;
  return uniform(-(static_cast<double>(half) + 0.5) * bin_width, bin_width, bins);
}

Eigen::Index CorrelationHistogram::bin_index(double tau) const {
  const double x = (tau - tau_min()) / bin_width;
  if (!(x >= 0.0)) return -1;
  const auto i = static_cast<Eigen::Index>(x);
  return i < size() ? i : -1;
}

bool CorrelationHistogram::same_geometry(const CorrelationHistogram& other) const {
  if (size() != other.size()) return false;
  const double tol = 1e-6 * bin_width;
  if (std::abs(bin_width - other.bin_width) > tol) return false;
  return ((bin_centers - other.bin_centers).abs() <= tol).all();
}

void CorrelationHistogram::merge(const CorrelationHistogram& other) {
  if (!same_geometry(other)) throw InvalidInput("merge: histogram geometry mismatch");
  counts += other.counts;
  normalized.reset();
  normalization_constant = 0.0;
  baseline_slope = 0.0;
  truncated = truncated || other.truncated;
}

CorrelationHistogram merge(const CorrelationHistogram& a, const CorrelationHistogram& b) {
  CorrelationHistogram out = a;
  out.merge(b);
  return out;
}

CorrelationHistogram normalize(const CorrelationHistogram& hist, const NormRegion& region) {
  const Eigen::ArrayXd abs_tau = hist.bin_centers.abs();
  const auto in_region = (abs_tau >= region.abs_min && abs_tau <= region.abs_max).eval();
  const Eigen::Index n = in_region.count();
  if (n == 0) throw InvalidInput("normalize: normalization region contains no bins");
  const double sum = in_region.select(hist.counts.cast<double>(), 0.0).sum();
  const double mean = sum / static_cast<double>(n);
  if (!(mean > 0.0)) throw InvalidInput("normalize: normalization region holds no counts");

  CorrelationHistogram out = hist;
  out.normalization_constant = mean;
  out.baseline_slope = 0.0;
  out.normalized = hist.counts.cast<double>() / mean;
  return out;
}

CorrelationHistogram normalize_start_stop(const CorrelationHistogram& hist, const NormRegion& region) {
  const Eigen::ArrayXd& tau = hist.bin_centers;
  const Eigen::ArrayXd counts = hist.counts.cast<double>();
  const auto in_region = (tau.abs() >= region.abs_min && tau.abs() <= region.abs_max).eval();
  const auto left = (in_region && tau < 0.0).eval();
  const auto right = (in_region && tau > 0.0).eval();
  if (left.count() == 0 || right.count() == 0)
    throw InvalidInput("normalize: region needs bins on both sides of zero");
  const double mean_left = left.select(counts, 0.0).sum() / static_cast<double>(left.count());
  const double mean_right = right.select(counts, 0.0).sum() / static_cast<double>(right.count());
  if (!(mean_left > 0.0) || !(mean_right > 0.0))
    throw InvalidInput("normalize: normalization region holds no counts");
  const double tau_left = left.select(tau, 0.0).sum() / static_cast<double>(left.count());
  const double tau_right = right.select(tau, 0.0).sum() / static_cast<double>(right.count());
  const double slope = std::log(mean_left / mean_right) / (tau_right - tau_left);

  const Eigen::ArrayXd flattened = counts * (slope * tau).exp();
  const double mean = in_region.select(flattened, 0.0).sum() / static_cast<double>(in_region.count());
  CorrelationHistogram out = hist;
  out.normalization_constant = mean;
  out.baseline_slope = slope;
  out.normalized = counts / out.baseline();
  return out;
}

void check_norm_region(const CorrelationHistogram& hist, const NormRegion& region,
                       double gamma_spon, double delta_t) {
  if (!(region.abs_min < region.abs_max)) throw InvalidInput("norm region: min must be < max");
  const double reach = std::min(-hist.tau_min(), hist.tau_max());
  if (region.abs_max > reach) throw InvalidInput("norm region extends beyond the histogram range");
  const double margin = 3.0 / gamma_spon;
  if (region.abs_min < margin) throw InvalidInput("norm region overlaps |tau| < 3/gamma_spon");
  const double lo = std::abs(delta_t) - margin;
  const double hi = std::abs(delta_t) + margin;
  if (region.abs_max >= lo && region.abs_min <= hi)
    throw InvalidInput("norm region overlaps the +-delta_t neighbourhood");
}

CorrelationHistogram rebin(const CorrelationHistogram& hist, int factor) {
  if (factor < 1) throw InvalidInput("rebin: factor must be >= 1");
  if (factor == 1) return hist;
  const Eigen::Index groups = hist.size() / factor;
  if (groups < 1) throw InvalidInput("rebin: factor exceeds the number of bins");

  CorrelationHistogram out;
  out.bin_width = hist.bin_width * factor;
  out.bin_centers.resize(groups);
  out.counts.resize(groups);
  for (Eigen::Index g = 0; g < groups; ++g) {
    out.bin_centers[g] = hist.bin_centers.segment(g * factor, factor).mean();
    out.counts[g] = hist.counts.segment(g * factor, factor).sum();
  }
  out.truncated = hist.truncated || groups * factor != hist.size();
  if (hist.normalized) {
    out.normalization_constant = hist.normalization_constant * factor;
    out.baseline_slope = hist.baseline_slope;
    out.normalized = out.counts.cast<double>() / out.baseline();
  }
  return out;
}

}  // namespace hom
