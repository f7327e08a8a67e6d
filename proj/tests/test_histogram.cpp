#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hom/coherence.hpp"
#include "hom/histogram.hpp"

#include <cmath>

using namespace hom;

namespace {

CorrelationHistogram flat(std::int64_t c) {
  CorrelationHistogram h = CorrelationHistogram::uniform(-30.0, 0.05, 1200);
  h.counts.setConstant(c);
  return h;
}

}  // namespace

TEST_CASE("geometry") {
  const CorrelationHistogram h = CorrelationHistogram::uniform(-30.0, 0.05, 1200);
  CHECK(h.size() == 1200);
  CHECK(h.tau_min() == doctest::Approx(-30.0));
  CHECK(h.tau_max() == doctest::Approx(30.0));
  CHECK(h.bin_index(-30.0) == 0);
  CHECK(h.bin_index(29.999) == 1199);
  CHECK(h.bin_index(30.0) == -1);
  CHECK(h.bin_index(-30.01) == -1);
  CHECK(h.bin_index(std::nan("")) == -1);

  const CorrelationHistogram c = CorrelationHistogram::centered(0.1, 1.0);
  CHECK(c.size() % 2 == 1);
  CHECK(c.bin_centers[c.size() / 2] == doctest::Approx(0.0));
  CHECK(c.bin_index(0.0) == c.size() / 2);
  CHECK_THROWS_AS(CorrelationHistogram::uniform(0.0, 0.0, 3), InvalidInput);
}

TEST_CASE("normalize") {
  const CorrelationHistogram a = normalize(flat(37), NormRegion{});
  REQUIRE(a.normalized);
  CHECK((*a.normalized == 1.0).all());
  CHECK(a.normalization_constant == 37.0);

  CorrelationHistogram h = flat(200);
  h.counts[h.bin_index(0.0)] = 80;
  const CorrelationHistogram b = normalize(h, NormRegion{});
  CHECK((*b.normalized)[h.bin_index(0.0)] == doctest::Approx(0.4));
  CHECK(b.counts[h.bin_index(0.0)] == 80);

  CHECK_THROWS_AS(normalize(flat(0), NormRegion{}), InvalidInput);
  CHECK_THROWS_AS(normalize(flat(5), NormRegion{40.0, 50.0}), InvalidInput);
}

TEST_CASE("normalize_start_stop removes an exponential baseline") {
  CorrelationHistogram h = CorrelationHistogram::uniform(-30.0, 0.05, 1200);
  const double s = 0.0148;
  for (Eigen::Index i = 0; i < h.size(); ++i)
    h.counts[i] = std::llround(1e6 * std::exp(-s * h.bin_centers[i]));
  const CorrelationHistogram n = normalize_start_stop(h, NormRegion{});
  CHECK(n.baseline_slope == doctest::Approx(s).epsilon(1e-4));
  CHECK(((*n.normalized) - 1.0).abs().maxCoeff() < 1e-5);
  // plain wing normalization leaves the slope in
  const CorrelationHistogram plain = normalize(h, NormRegion{});
  CHECK((*plain.normalized)[h.bin_index(0.0)] < 0.97);

  // a flat histogram gives zero slope and matches normalize()
  const CorrelationHistogram f = normalize_start_stop(flat(50), NormRegion{});
  CHECK(f.baseline_slope == 0.0);
  CHECK((*f.normalized == 1.0).all());
}

TEST_CASE("norm region checks") {
  const CorrelationHistogram h = flat(1);
  const double gamma = 1.0 / 3.4;
  CHECK_NOTHROW(check_norm_region(h, NormRegion{}, gamma, 4.6));
  CHECK_THROWS_AS(check_norm_region(h, NormRegion{5.0, 28.0}, gamma, 4.6), InvalidInput);
  CHECK_THROWS_AS(check_norm_region(h, NormRegion{15.0, 35.0}, gamma, 4.6), InvalidInput);
  CHECK_THROWS_AS(check_norm_region(h, NormRegion{15.0, 28.0}, gamma, 20.0), InvalidInput);
  CHECK_THROWS_AS(check_norm_region(h, NormRegion{20.0, 15.0}, gamma, 4.6), InvalidInput);
}

TEST_CASE("rebin") {
  CorrelationHistogram h = CorrelationHistogram::uniform(0.0, 1.0, 4);
  h.counts << 1, 2, 3, 4;
  const CorrelationHistogram same = rebin(h, 1);
  CHECK((same.counts == h.counts).all());
  const CorrelationHistogram r = rebin(h, 2);
  REQUIRE(r.size() == 2);
  CHECK(r.counts[0] == 3);
  CHECK(r.counts[1] == 7);
  CHECK(r.bin_width == 2.0);
  CHECK(r.bin_centers[0] == doctest::Approx(1.0));
  CHECK(!r.truncated);

  const CorrelationHistogram t = rebin(h, 3);
  CHECK(t.size() == 1);
  CHECK(t.counts[0] == 6);
  CHECK(t.truncated);
  CHECK_THROWS_AS(rebin(h, 0), InvalidInput);
  CHECK_THROWS_AS(rebin(h, 5), InvalidInput);

  CorrelationHistogram big = flat(3);
  big.counts[600] = 10;
  for (int f : {2, 3, 4, 5, 7}) CHECK(rebin(big, f).total() <= big.total());
  for (int f : {2, 3, 4, 5}) CHECK(rebin(big, f).total() == big.total());
}

TEST_CASE("rebin carries normalization") {
  CorrelationHistogram h = flat(100);
  h.counts[600] = 40;
  h.counts[601] = 60;
  const CorrelationHistogram n = normalize(h, NormRegion{});
  const CorrelationHistogram r = rebin(n, 2);
  REQUIRE(r.normalized);
  CHECK(r.normalization_constant == 200.0);
  CHECK((*r.normalized)[300] == doctest::Approx(0.5));
  CHECK((*r.normalized)[0] == doctest::Approx(1.0));
}

TEST_CASE("merge") {
  CorrelationHistogram a = flat(2);
  CorrelationHistogram b = flat(3);
  const CorrelationHistogram n = normalize(a, NormRegion{});
  const CorrelationHistogram m = merge(n, b);
  CHECK((m.counts == 5).all());
  CHECK(!m.normalized);
  CHECK((merge(a, b).counts == merge(b, a).counts).all());
  const CorrelationHistogram other = CorrelationHistogram::uniform(-30.0, 0.1, 600);
  CHECK_THROWS_AS(merge(a, other), InvalidInput);
}
