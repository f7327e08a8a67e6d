#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hom/cli.hpp"
#include "hom/io.hpp"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace hom;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "homsim");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "hom_test_cli" / name;
  fs::remove_all(p);
  return p;
}

// Value of `key` in "key = value" text.
std::string lookup(const std::string& text, const std::string& key) {
  for (const auto& [k, v] : parse_key_values(text))
    if (k == key) return v;
  FAIL("missing key " << key);
  return {};
}

// Parses a curves CSV into header metadata and columns.
struct Curves {
  KeyValues meta;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
};

Curves parse_curves(const std::string& text) {
  Curves c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      c.meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (c.names.empty()) {
      c.names = fields;
      continue;
    }
    std::vector<double> row;
    for (const auto& x : fields) row.push_back(parse_number(x));
    c.rows.push_back(row);
  }
  return c;
}

std::size_t column(const Curves& c, const std::string& name) {
  for (std::size_t i = 0; i < c.names.size(); ++i)
    if (c.names[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == exit_usage);
  CHECK(cli({"frobnicate"}).code == exit_usage);
  CHECK(cli({"analytic", "--no-such-flag"}).code == exit_usage);
  CHECK(cli({"--help"}).code == exit_ok);
  CHECK(cli({"analytic", "--gamma-spon", "-1"}).code == exit_usage);
  CHECK(cli({"analytic", "--theta", "2"}).code == exit_usage);
  CHECK(cli({"simulate", "--set", "colour=blue", "--out", scratch("bad").string()}).code == exit_usage);
  CHECK(cli({"simulate", "--set", "noequals", "--out", scratch("bad").string()}).code == exit_usage);
  CHECK(cli({"simulate", "--pol", "diagonal", "--out", scratch("bad").string()}).code == exit_usage);
  CHECK(cli({"analyze", "only_one.csv"}).code == exit_usage);
}

TEST_CASE("analytic default curves") {
  const Run r = cli({"analytic"});
  REQUIRE(r.code == exit_ok);
  const Curves c = parse_curves(r.out);
  const std::size_t t = column(c, "tau_ns");
  const std::size_t par = column(c, "g2_parallel");
  const std::size_t orth = column(c, "g2_orthogonal");
  bool seen_zero = false;
  for (const auto& row : c.rows) {
    if (row[t] != 0.0) continue;
    seen_zero = true;
    CHECK(row[par] == doctest::Approx(0.0));
    CHECK(row[orth] == 0.5);
  }
  CHECK(seen_zero);
  CHECK(c.rows.size() == 201);
}

TEST_CASE("analytic header and theta zero") {
  const Run r = cli({"analytic", "--gamma-pure", "0.2", "--gamma-spon", "0.294"});
  REQUIRE(r.code == exit_ok);
  const Curves c = parse_curves(r.out);
  double t2 = 0.0;
  for (const auto& [k, v] : c.meta)
    if (k == "T2_ns") t2 = parse_number(v);
  CHECK(t2 == doctest::Approx(2.88184438040346).epsilon(1e-12));

  const Run z = cli({"analytic", "--theta", "0", "--irf-fwhm-ns", "0.42"});
  REQUIRE(z.code == exit_ok);
  const Curves d = parse_curves(z.out);
  const std::size_t par = column(d, "g2_parallel");
  const std::size_t orth = column(d, "g2_orthogonal");
  const std::size_t par_irf = column(d, "g2_parallel_irf");
  const std::size_t orth_irf = column(d, "g2_orthogonal_irf");
  for (const auto& row : d.rows) {
    CHECK(row[par] == row[orth]);
    CHECK(row[par_irf] == row[orth_irf]);
  }
}

TEST_CASE("analytic writes a file") {
  const fs::path dir = scratch("analytic");
  fs::create_directories(dir);
  const fs::path file = dir / "curves.csv";
  REQUIRE(cli({"analytic", "--out", file.string()}).code == exit_ok);
  CHECK(read_text_file(file) == cli({"analytic"}).out);
}

TEST_CASE("simulate with a tiny duration gives empty outputs with headers") {
  const fs::path dir = scratch("tiny");
  const Run r = cli({"simulate", "--duration-ns", "1e-6", "--out", dir.string()});
  REQUIRE(r.code == exit_ok);
  CHECK(read_text_file(dir / "timetags.csv") == "channel,time_ns\n");
  const CorrelationHistogram h = read_histogram(dir / "histogram.csv");
  CHECK(h.size() == 1200);
  CHECK(h.total() == 0);
  CHECK(!h.normalized);
  CHECK(r.err.find("unnormalized") != std::string::npos);
}

TEST_CASE("simulate is reproducible and its config echo reruns it") {
  const fs::path a = scratch("rep_a");
  const fs::path b = scratch("rep_b");
  const fs::path c = scratch("rep_c");
  const std::vector<std::string> base{"simulate", "--duration-ns", "2e6", "--seed", "11",
                                      "--set", "efficiency_3=0.3", "--set", "efficiency_4=0.3"};
  auto with_out = [&](const fs::path& p) {
    auto args = base;
    args.push_back("--out");
    args.push_back(p.string());
    return args;
  };
  REQUIRE(cli(with_out(a)).code == exit_ok);
  REQUIRE(cli(with_out(b)).code == exit_ok);
  // config.txt differs only in its out key
  for (const char* f : {"histogram.csv", "timetags.csv"})
    CHECK(read_text_file(a / f) == read_text_file(b / f));
  CHECK(read_histogram(a / "histogram.csv").total() > 0);

  REQUIRE(cli({"simulate", "--config", (a / "config.txt").string(), "--out", c.string()}).code ==
          exit_ok);
  CHECK(read_text_file(a / "histogram.csv") == read_text_file(c / "histogram.csv"));
  CHECK(read_text_file(a / "timetags.csv") == read_text_file(c / "timetags.csv"));
  const RunConfig echoed = read_config(c / "config.txt");
  CHECK(echoed.seed == 11);
  CHECK(echoed.detection.efficiency[0] == 0.3);

  CHECK(cli({"simulate", "--config", (a / "missing.txt").string()}).code == exit_runtime);
}

TEST_CASE("analyze") {
  const fs::path sim = scratch("an_sim");
  REQUIRE(cli({"simulate", "--duration-ns", "2e7", "--seed", "5", "--no-timetags", "--out",
               sim.string()})
              .code == exit_ok);
  CHECK(!fs::exists(sim / "timetags.csv"));
  const std::string h = (sim / "histogram.csv").string();

  const fs::path out = scratch("an_same");
  const Run r = cli({"analyze", h, h, "--out", out.string()});
  REQUIRE(r.code == exit_ok);
  const std::string results = read_text_file(out / "results.txt");
  CHECK(r.out == results);
  CHECK(parse_number(lookup(results, "v0_direct")) == 0.0);
  CHECK(std::abs(parse_number(lookup(results, "v0_hat"))) < 0.02);
  const std::string diff = read_text_file(out / "difference.csv");
  CHECK(diff.rfind("tau_ns,value,sigma\n", 0) == 0);
  std::istringstream lines(diff);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const std::string value = line.substr(first + 1, second - first - 1);
    CHECK((value == "0" || value == "nan"));
  }
  CHECK(rows == 1200 / 7);

  // a histogram on a different grid
  CorrelationHistogram other = CorrelationHistogram::uniform(-30.0, 0.1, 600);
  other.counts.setConstant(10);
  const fs::path odd = scratch("an_odd");
  fs::create_directories(odd);
  write_text_file(odd / "h.csv", histogram_csv(other));
  CHECK(cli({"analyze", h, (odd / "h.csv").string(), "--out", odd.string()}).code == exit_runtime);
  CHECK(cli({"analyze", h, (odd / "none.csv").string(), "--out", odd.string()}).code ==
        exit_runtime);
  CHECK(cli({"analyze", h, h, "--bin", "0", "--out", odd.string()}).code == exit_usage);
}

TEST_CASE("selftest exit codes") {
  CHECK(cli({"selftest", "--quick"}).code == exit_ok);
  const Run bad = cli({"selftest", "--quick", "--inject-fault"});
  CHECK(bad.code == exit_selftest_failed);
  CHECK(bad.err.find("oracle") != std::string::npos);
}
