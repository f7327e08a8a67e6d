#ifndef HOM_SELFTEST_HPP
#define HOM_SELFTEST_HPP

#include "hom/coherence.hpp"
#include "hom/histogram.hpp"
#include "hom/pipeline.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace hom {

struct OracleComparison {
  int bins = 0;
  /// Bins whose normalized value lies within 3 sigma of the analytic curve.
  int within = 0;
  double max_abs_z = 0.0;
  double fraction() const { return bins > 0 ? static_cast<double>(within) / bins : 0.0; }
};

/// Compares a normalized histogram with bin-averaged g2_34 over |tau| <= max_abs_tau.
/// interference_sign = -1 flips the interference term (negative control).
OracleComparison compare_to_analytic(const CorrelationHistogram& normalized,
                                     const EmitterParams& emitter, const BeamSplitterConfig& bs,
                                     PolarizationMode pol, double max_abs_tau,
                                     double interference_sign = 1.0);

/// Ideal detection: full-correlation histogram, no jitter, dead time or background.
/// Duration is chosen to emit about `photons` photons. Efficiencies well below 1 keep
/// interfering clusters small, which is where the pair law holds.
RunConfig ideal_config(const EmitterParams& emitter, PolarizationMode pol, double photons,
                       std::uint64_t seed, double efficiency = 1.0);

struct SelftestOptions {
  bool quick = false;
  std::uint64_t seed = 1;
  /// Flips the interference sign in the analytic oracle so that check must fail.
  bool inject_fault = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the invariant and oracle checks, streaming one line per check to `log`.
std::vector<CheckResult> run_selftest(const SelftestOptions& options, std::ostream* log = nullptr);

}  // namespace hom

#endif  // HOM_SELFTEST_HPP
