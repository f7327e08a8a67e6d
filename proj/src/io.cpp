#include "hom/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hom {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidInput("expected true/false, got '" + text + "'");
}

std::int64_t parse_integer(const std::string& text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidInput("expected an integer, got '" + text + "'");
  return v;
}

// Data rows and "# key=value" metadata lines of a CSV document.
struct CsvDocument {
  KeyValues metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvDocument parse_csv(const std::string& text) {
  CsvDocument doc;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos)
        doc.metadata.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      continue;
    }
    if (doc.header.empty()) {
      doc.header = split(line, ',');
      continue;
    }
    doc.rows.push_back(split(line, ','));
    if (doc.rows.back().size() != doc.header.size())
      throw IoError("csv row has " + std::to_string(doc.rows.back().size()) +
                    " fields, header has " + std::to_string(doc.header.size()));
  }
  if (doc.header.empty()) throw IoError("csv has no header row");
  return doc;
}

void expect_header(const CsvDocument& doc, const std::vector<std::string>& expected) {
  if (doc.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw IoError("unexpected csv header, want " + want);
  }
}

std::string optional_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string("instantaneous");
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

double parse_number(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  const char* begin = text.data();
  if (!text.empty() && text.front() == '+') ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidInput("expected a number, got '" + text + "'");
  return v;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("line " + std::to_string(number) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidInput("line " + std::to_string(number) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

std::string format_key_values(const KeyValues& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& em = cfg.emitter;
  auto& in = cfg.interferometer;
  auto& det = cfg.detection;
  if (key == "gamma_spon") em.gamma_spon = parse_number(value);
  else if (key == "gamma_pure") em.gamma_pure = parse_number(value);
  else if (key == "w_p") em.w_p = parse_number(value);
  else if (key == "gamma_vib") {
    if (value == "instantaneous" || value == "inf") em.gamma_vib.reset();
    else em.gamma_vib = parse_number(value);
  }
  else if (key == "delta_t_ns") in.delta_t = parse_number(value);
  else if (key == "theta") in.bs.theta = parse_number(value);
  else if (key == "mode_match") in.bs.mode_match = parse_number(value);
  else if (key == "pol") in.pol = parse_polarization_mode(value);
  else if (key == "arm_prob_long") in.arm_prob_long = parse_number(value);
  else if (key == "pairing_window_ns") {
    if (value == "auto") in.pairing_window.reset();
    else in.pairing_window = parse_number(value);
  }
  else if (key == "pairing") in.pairing = parse_pairing_rule(value);
  else if (key == "irf_fwhm_ns") det.irf_fwhm_pair = parse_number(value);
  else if (key == "efficiency_3") det.efficiency[0] = parse_number(value);
  else if (key == "efficiency_4") det.efficiency[1] = parse_number(value);
  else if (key == "dead_time_3_ns") det.dead_time[0] = parse_number(value);
  else if (key == "dead_time_4_ns") det.dead_time[1] = parse_number(value);
  else if (key == "background_fraction") det.background_fraction = parse_number(value);
  else if (key == "electronic_delay_ns") {
    if (value == "auto") det.electronic_delay.reset();
    else det.electronic_delay = parse_number(value);
  }
  else if (key == "tau_min_ns") det.tau_min = parse_number(value);
  else if (key == "tau_max_ns") det.tau_max = parse_number(value);
  else if (key == "bin_width_ns") det.bin_width = parse_number(value);
  else if (key == "histogram_mode") det.mode = parse_histogram_mode(value);
  else if (key == "norm_min_ns") cfg.norm.abs_min = parse_number(value);
  else if (key == "norm_max_ns") cfg.norm.abs_max = parse_number(value);
  else if (key == "duration_ns") cfg.duration = parse_number(value);
  else if (key == "seed") {
    std::uint64_t s = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
      throw InvalidInput("seed must be an integer in [0, 2^64), got '" + value + "'");
    cfg.seed = s;
  }
  else if (key == "replicas") cfg.replicas = static_cast<int>(parse_integer(value));
  else if (key == "write_timetags") cfg.write_timetags = parse_bool(value);
  else if (key == "out") cfg.out_dir = value;
  else throw InvalidInput("unknown config key '" + key + "'");
}

RunConfig config_from_key_values(const KeyValues& entries, RunConfig base) {
  for (const auto& [k, v] : entries) apply_config_entry(base, k, v);
  return base;
}

RunConfig read_config(const std::filesystem::path& path) {
  return config_from_key_values(parse_key_values(read_text_file(path)));
}

KeyValues config_to_key_values(const RunConfig& cfg) {
  const auto& em = cfg.emitter;
  const auto& in = cfg.interferometer;
  const auto& det = cfg.detection;
  return {
      {"gamma_spon", format_number(em.gamma_spon)},
      {"gamma_pure", format_number(em.gamma_pure)},
      {"w_p", format_number(em.w_p)},
      {"gamma_vib", optional_number(em.gamma_vib)},
      {"delta_t_ns", format_number(in.delta_t)},
      {"theta", format_number(in.bs.theta)},
      {"mode_match", format_number(in.bs.mode_match)},
      {"pol", to_string(in.pol)},
      {"arm_prob_long", format_number(in.arm_prob_long)},
      {"pairing_window_ns", format_number(in.window_for(em))},
      {"pairing", to_string(in.pairing)},
      {"irf_fwhm_ns", format_number(det.irf_fwhm_pair)},
      {"efficiency_3", format_number(det.efficiency[0])},
      {"efficiency_4", format_number(det.efficiency[1])},
      {"dead_time_3_ns", format_number(det.dead_time[0])},
      {"dead_time_4_ns", format_number(det.dead_time[1])},
      {"background_fraction", format_number(det.background_fraction)},
      {"electronic_delay_ns", format_number(det.stop_delay())},
      {"tau_min_ns", format_number(det.tau_min)},
      {"tau_max_ns", format_number(det.tau_max)},
      {"bin_width_ns", format_number(det.bin_width)},
      {"histogram_mode", to_string(det.mode)},
      {"norm_min_ns", format_number(cfg.norm.abs_min)},
      {"norm_max_ns", format_number(cfg.norm.abs_max)},
      {"duration_ns", format_number(cfg.duration)},
      {"seed", std::to_string(cfg.seed)},
      {"replicas", std::to_string(cfg.replicas)},
      {"write_timetags", cfg.write_timetags ? "true" : "false"},
      {"out", cfg.out_dir},
  };
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string timetags_csv(std::span<const DetectionEvent> events) {
  std::string out = "channel,time_ns\n";
  out.reserve(out.size() + events.size() * 24);
  for (const DetectionEvent& e : events) {
    out += std::to_string(channel_number(e.channel));
    out += ',';
    out += format_number(e.time);
    out += '\n';
  }
  return out;
}

std::vector<DetectionEvent> parse_timetags_csv(const std::string& text) {
  const CsvDocument doc = parse_csv(text);
  expect_header(doc, {"channel", "time_ns"});
  std::vector<DetectionEvent> out;
  out.reserve(doc.rows.size());
  for (const auto& row : doc.rows) {
    const std::int64_t ch = parse_integer(row[0]);
    if (ch != 3 && ch != 4) throw IoError("channel must be 3 or 4");
    out.push_back({ch == 3 ? Channel::three : Channel::four, parse_number(row[1])});
  }
  return out;
}

std::string histogram_csv(const CorrelationHistogram& hist) {
  std::string out;
  out += "# bin_width_ns=" + format_number(hist.bin_width) + "\n";
  if (hist.normalized)
    out += "# normalization_constant=" + format_number(hist.normalization_constant) + "\n";
  if (hist.normalized && hist.baseline_slope != 0.0)
    out += "# baseline_slope_per_ns=" + format_number(hist.baseline_slope) + "\n";
  if (hist.truncated) out += "# truncated=true\n";
  out += "tau_ns,counts,normalized\n";
  for (Eigen::Index i = 0; i < hist.size(); ++i) {
    out += format_number(hist.bin_centers[i]);
    out += ',';
    out += std::to_string(hist.counts[i]);
    out += ',';
    if (hist.normalized) out += format_number((*hist.normalized)[i]);
    out += '\n';
  }
  return out;
}

CorrelationHistogram parse_histogram_csv(const std::string& text) {
  const CsvDocument doc = parse_csv(text);
  expect_header(doc, {"tau_ns", "counts", "normalized"});
  CorrelationHistogram hist;
  const auto n = static_cast<Eigen::Index>(doc.rows.size());
  hist.bin_centers.resize(n);
  hist.counts.resize(n);
  Eigen::ArrayXd normalized(n);
  bool has_normalized = n > 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = doc.rows[static_cast<std::size_t>(i)];
    hist.bin_centers[i] = parse_number(row[0]);
    hist.counts[i] = parse_integer(row[1]);
    if (row[2].empty()) has_normalized = false;
    else normalized[i] = parse_number(row[2]);
  }
  std::optional<double> width;
  for (const auto& [k, v] : doc.metadata) {
    if (k == "bin_width_ns") width = parse_number(v);
    else if (k == "normalization_constant") hist.normalization_constant = parse_number(v);
    else if (k == "baseline_slope_per_ns") hist.baseline_slope = parse_number(v);
    else if (k == "truncated") hist.truncated = parse_bool(v);
  }
  if (!width && n >= 2) width = hist.bin_centers[1] - hist.bin_centers[0];
  if (!width || !(*width > 0.0)) throw IoError("histogram csv lacks a bin width");
  hist.bin_width = *width;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(hist.bin_centers[i] - hist.bin_centers[i - 1] - hist.bin_width) >
        1e-6 * hist.bin_width)
      throw IoError("histogram bins are not uniform");
  }
  if (has_normalized) hist.normalized = normalized;
  else {
    hist.normalization_constant = 0.0;
    hist.baseline_slope = 0.0;
  }
  return hist;
}

CorrelationHistogram read_histogram(const std::filesystem::path& path) {
  try {
    return parse_histogram_csv(read_text_file(path));
  } catch (const InvalidInput& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string difference_csv(const DifferenceCurve& curve) {
  std::string out = "tau_ns,value,sigma\n";
  for (Eigen::Index i = 0; i < curve.size(); ++i) {
    out += format_number(curve.tau[i]) + ',' + format_number(curve.value[i]) + ',' +
           format_number(curve.sigma[i]) + '\n';
  }
  return out;
}

std::string curves_csv(const KeyValues& metadata, const Eigen::ArrayXd& tau,
                       const std::vector<std::pair<std::string, Eigen::ArrayXd>>& columns) {
  std::string out;
  for (const auto& [k, v] : metadata) out += "# " + k + "=" + v + "\n";
  out += "tau_ns";
  for (const auto& [name, values] : columns) {
    if (values.size() != tau.size()) throw InvalidInput("column '" + name + "' has wrong length");
    out += "," + name;
  }
  out += '\n';
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    out += format_number(tau[i]);
    for (const auto& column : columns) out += ',' + format_number(column.second[i]);
    out += '\n';
  }
  return out;
}

KeyValues fit_results(const HomFitResult& fit) {
  return {
      {"gamma_pure_hat_per_ns", format_number(fit.gamma_pure_hat)},
      {"w_p_hat_per_ns", format_number(fit.w_p_hat)},
      {"contrast_hat", format_number(fit.contrast_hat)},
      {"background_hat", format_number(fit.background_hat)},
      {"t2_hat_ns", format_number(fit.t2_hat)},
      {"v0_hat", format_number(fit.v0_hat)},
      {"v0_intrinsic", format_number(fit.v0_intrinsic)},
      {"stderr_gamma_pure_per_ns", format_number(fit.stderr_values[0])},
      {"stderr_w_p_per_ns", format_number(fit.stderr_values[1])},
      {"stderr_contrast", format_number(fit.stderr_values[2])},
      {"stderr_background", format_number(fit.stderr_values[3])},
      {"rss", format_number(fit.rss)},
      {"converged", fit.converged ? "true" : "false"},
      {"physical", fit.physical ? "true" : "false"},
      {"gamma_spon_per_ns", format_number(fit.gamma_spon)},
      {"bins_used", std::to_string(fit.bins_used)},
      {"evaluations", std::to_string(fit.evaluations)},
  };
}

}  // namespace hom
