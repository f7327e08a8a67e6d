#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hom/analysis.hpp"
#include "hom/random.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace hom;

namespace {

constexpr double kGamma = 1.0 / 3.4;

// Histogram whose counts follow `curve` times `scale`, optionally with Poisson noise.
CorrelationHistogram synthetic(const CorrelationHistogram& grid, const Eigen::ArrayXd& curve,
                               double scale, Rng* rng) {
  CorrelationHistogram h = grid;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double mean = scale * curve[i];
    if (rng) {
      std::poisson_distribution<std::int64_t> draw(mean);
      h.counts[i] = draw(*rng);
    } else {
      h.counts[i] = std::llround(mean);
    }
  }
  h.normalization_constant = scale;
  h.normalized = h.counts.cast<double>() / scale;
  return h;
}

CorrelationHistogram constant(double value, double scale) {
  const CorrelationHistogram grid = CorrelationHistogram::centered(0.1, 3.0);
  return synthetic(grid, Eigen::ArrayXd::Constant(grid.size(), value), scale, nullptr);
}

}  // namespace

TEST_CASE("difference curve") {
  const CorrelationHistogram h = constant(0.8, 1000.0);
  const DifferenceCurve same = difference_curve(h, h);
  CHECK((same.value == 0.0).all());
  CHECK(same.defined.all());
  CHECK((same.sigma > 0.0).all());

  CorrelationHistogram orth = constant(1.0, 1000.0);
  CorrelationHistogram par = constant(1.0, 1000.0);
  const Eigen::Index zero = orth.bin_index(0.0);
  (*orth.normalized)[zero] = 0.526;
  (*par.normalized)[zero] = 0.4;
  const DifferenceCurve d = difference_curve(orth, par);
  CHECK(d.value[zero] == doctest::Approx(0.239543726235741).epsilon(1e-12));

  (*orth.normalized)[0] = 0.0;
  const DifferenceCurve u = difference_curve(orth, par);
  CHECK(!u.defined[0]);
  CHECK(std::isnan(u.value[0]));

  CorrelationHistogram raw = constant(1.0, 10.0);
  raw.normalized.reset();
  CHECK_THROWS_AS(difference_curve(raw, par), InvalidInput);
  const CorrelationHistogram coarse = CorrelationHistogram::centered(0.2, 3.0);
  CHECK_THROWS_AS(
      difference_curve(synthetic(coarse, Eigen::ArrayXd::Ones(coarse.size()), 10.0, nullptr), par),
      InvalidInput);
}

TEST_CASE("difference curve error propagation") {
  const CorrelationHistogram orth = constant(1.0, 400.0);
  const CorrelationHistogram par = constant(0.5, 400.0);
  const DifferenceCurve d = difference_curve(orth, par);
  // sigma_o = 20/400, sigma_p = sqrt(200)/400
  const double so = 0.05;
  const double sp = std::sqrt(200.0) / 400.0;
  CHECK(d.sigma[0] == doctest::Approx(std::sqrt(0.25 * so * so + sp * sp)).epsilon(1e-12));
  CHECK(d.value[0] == doctest::Approx(0.5));
}

TEST_CASE("v0 from histograms") {
  const CorrelationHistogram h = constant(0.7, 100.0);
  CHECK(v0_from_histograms(h, h, 0.42) == 0.0);
  CorrelationHistogram orth = constant(1.0, 1000.0);
  CorrelationHistogram par = constant(1.0, 1000.0);
  (*orth.normalized)[orth.bin_index(0.0)] = 0.5;
  (*par.normalized)[par.bin_index(0.0)] = 0.0;
  CHECK(v0_from_histograms(par, orth, 0.1) == 1.0);
  // three bins: (0.5 + 1 + 1) / 3 against (0 + 1 + 1) / 3
  CHECK(v0_from_histograms(par, orth, 0.3) == doctest::Approx(0.2));
  CHECK_THROWS_AS(v0_from_histograms(par, orth, 0.05), InvalidInput);
}

TEST_CASE("model without IRF or background is the bin-averaged analytic curve") {
  const CorrelationHistogram grid = CorrelationHistogram::centered(0.05, 4.0);
  const FitParameters params{0.2, 8.0, 0.7, 0.0};
  const ModelCurves m = hom_model(grid.bin_centers, grid.bin_width, params, kGamma,
                                  std::numbers::pi / 4.0, 0.0, 200);
  EmitterParams p;
  p.gamma_spon = kGamma;
  p.gamma_pure = 0.2;
  p.w_p = 8.0;
  BeamSplitterConfig bs;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double par = 0.0;
    double orth = 0.0;
    // midpoint rule, independent of the model's sub-sampling
    for (int k = 0; k < 1000; ++k) {
      const double t = grid.bin_centers[i] + grid.bin_width * ((k + 0.5) / 1000.0 - 0.5);
      par += g2_34(t, p, bs, PolarizationMode::parallel) / 1000.0;
      orth += g2_34(t, p, bs, PolarizationMode::orthogonal) / 1000.0;
    }
    CHECK(m.parallel[i] == doctest::Approx(par).epsilon(1e-4));
    CHECK(m.orthogonal[i] == doctest::Approx(orth).epsilon(1e-4));
  }
}

TEST_CASE("model with IRF matches numerical convolution") {
  const Eigen::ArrayXd tau = Eigen::ArrayXd::LinSpaced(2001, -10.0, 10.0);
  EmitterParams p;
  p.gamma_spon = kGamma;
  BeamSplitterConfig bs;
  const FitParameters params{0.2, 8.0, 0.7, 0.1};
  const ModelCurves m = hom_model(tau, 1e-9, params, kGamma, std::numbers::pi / 4.0, 0.42, 1);
  const Eigen::ArrayXd par = convolve_irf(tau, g2_34(tau, p, bs, PolarizationMode::parallel), 0.42);
  for (Eigen::Index i = 800; i <= 1200; ++i)
    CHECK(m.parallel[i] == doctest::Approx(0.9 * par[i] + 0.1).epsilon(2e-3));
}

TEST_CASE("noise-free fit recovers the truth") {
  const CorrelationHistogram grid = CorrelationHistogram::centered(0.1, 5.0);
  const FitParameters truth{0.2, 0.5, 0.7, 0.05};
  DetectionConfig det;
  const ModelCurves m = hom_model(grid.bin_centers, grid.bin_width, truth, kGamma,
                                  std::numbers::pi / 4.0, det.irf_fwhm_pair);
  const auto par = synthetic(grid, m.parallel, 1e9, nullptr);
  const auto orth = synthetic(grid, m.orthogonal, 1e9, nullptr);
  const HomFitResult fit = fit_hom_model(par, orth, kGamma, det, {0.25, 0.6, 0.6, 0.08});
  CHECK(fit.gamma_pure_hat == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(fit.w_p_hat == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(fit.contrast_hat == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(fit.background_hat == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(fit.t2_hat == doctest::Approx(1.0 / (0.5 * kGamma + fit.gamma_pure_hat)));
  CHECK(fit.converged);
  CHECK(fit.physical);
  CHECK(fit.v0_intrinsic == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(fit.v0_hat >= 0.0);
  CHECK(fit.v0_hat <= 1.0);
}

TEST_CASE("fit is invariant under count scaling") {
  const CorrelationHistogram grid = CorrelationHistogram::centered(0.1, 5.0);
  const FitParameters truth{0.2, 8.0, 0.7, 0.1};
  DetectionConfig det;
  const ModelCurves m = hom_model(grid.bin_centers, grid.bin_width, truth, kGamma,
                                  std::numbers::pi / 4.0, det.irf_fwhm_pair);
  Rng rng = make_rng(4, RngStream::fit);
  auto par = synthetic(grid, m.parallel, 3000.0, &rng);
  auto orth = synthetic(grid, m.orthogonal, 3000.0, &rng);
  const HomFitResult a = fit_hom_model(par, orth, kGamma, det, {0.25, 7.0, 0.6, 0.05});
  for (auto* h : {&par, &orth}) {
    h->counts *= 4;
    h->normalization_constant *= 4.0;
  }
  const HomFitResult b = fit_hom_model(par, orth, kGamma, det, {0.25, 7.0, 0.6, 0.05});
  CHECK(std::abs(a.gamma_pure_hat - b.gamma_pure_hat) < 1e-6);
  CHECK(std::abs(a.w_p_hat - b.w_p_hat) < 1e-6);
  CHECK(std::abs(a.contrast_hat - b.contrast_hat) < 1e-6);
  CHECK(std::abs(a.background_hat - b.background_hat) < 1e-6);
  // counts four times larger halve the standard errors
  CHECK(b.stderr_values[0] == doctest::Approx(0.5 * a.stderr_values[0]).epsilon(0.01));
}

TEST_CASE("fit input checks") {
  const CorrelationHistogram h = constant(1.0, 100.0);
  DetectionConfig det;
  CHECK_THROWS_AS(fit_hom_model(h, h, 0.0, det, {}), InvalidInput);
  FitOptions narrow;
  narrow.fit_window = 0.1;
  CHECK_THROWS_AS(fit_hom_model(h, h, kGamma, det, {}, narrow), InvalidInput);
}

TEST_CASE("nelder-mead") {
  // offset by one so the relative stopping rule has a nonzero scale
  const auto rosenbrock = [](const Eigen::VectorXd& x) {
    return 1.0 + 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  NelderMeadOptions opt;
  opt.relative_tolerance = 1e-14;
  const NelderMeadResult r =
      nelder_mead(rosenbrock, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(0.1, 0.1), opt);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));

  // a budget that is too small reports no convergence
  opt.max_evaluations = 20;
  CHECK(!nelder_mead(rosenbrock, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(0.1, 0.1), opt)
             .converged);

  // NaN regions are treated as walls
  const auto walled = [](const Eigen::VectorXd& x) {
    return x[0] < 0.0 ? std::nan("") : 1.0 + (x[0] - 2.0) * (x[0] - 2.0);
  };
  const NelderMeadResult w =
      nelder_mead(walled, Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 1.0));
  CHECK(w.x[0] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("numerical hessian of a quadratic") {
  Eigen::Matrix3d a;
  a << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  const auto f = [&a](const Eigen::VectorXd& x) { return 0.5 * x.dot(a * x) + x.sum(); };
  const Eigen::MatrixXd h =
      numerical_hessian(f, Eigen::Vector3d(0.3, -1.0, 2.0), Eigen::Vector3d::Constant(1e-3));
  CHECK((h - a).cwiseAbs().maxCoeff() < 1e-6);
}
