#ifndef HOM_IO_HPP
#define HOM_IO_HPP

#include "hom/analysis.hpp"
#include "hom/events.hpp"
#include "hom/histogram.hpp"
#include "hom/pipeline.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hom {

/// File-system or parse failure on an input/output file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
double parse_number(const std::string& text);

/// Ordered key/value pairs of a flat "key = value" file.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& entries);

/// Builds a RunConfig from the experiment defaults plus the given keys.
/// Unknown keys and malformed values raise InvalidInput.
RunConfig config_from_key_values(const KeyValues& entries, RunConfig base = experiment_defaults());
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig read_config(const std::filesystem::path& path);
/// Every key with its resolved value; parsing the result gives back the same config.
KeyValues config_to_key_values(const RunConfig& cfg);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// CSV writers and readers. Comma separated, header row, LF endings. Lines
// starting with '#' before the header carry "key=value" metadata.
std::string timetags_csv(std::span<const DetectionEvent> events);
std::vector<DetectionEvent> parse_timetags_csv(const std::string& text);

/// Columns tau_ns,counts,normalized; normalized is empty when absent.
std::string histogram_csv(const CorrelationHistogram& hist);
CorrelationHistogram parse_histogram_csv(const std::string& text);
CorrelationHistogram read_histogram(const std::filesystem::path& path);

/// Columns tau_ns,value,sigma; undefined bins are written as nan.
std::string difference_csv(const DifferenceCurve& curve);

/// Columns tau_ns then one per named curve.
std::string curves_csv(const KeyValues& metadata, const Eigen::ArrayXd& tau,
                       const std::vector<std::pair<std::string, Eigen::ArrayXd>>& columns);

KeyValues fit_results(const HomFitResult& fit);

}  // namespace hom

#endif  // HOM_IO_HPP
