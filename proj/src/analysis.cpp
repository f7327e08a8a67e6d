#include "hom/analysis.hpp"

#include "hom/random.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <vector>

namespace hom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_normalized_pair(const CorrelationHistogram& a, const CorrelationHistogram& b) {
  if (!a.same_geometry(b)) throw InvalidInput("histograms differ in bin geometry");
  if (!a.normalized || !b.normalized) throw InvalidInput("histograms must be normalized");
  if (!(a.normalization_constant > 0.0) || !(b.normalization_constant > 0.0))
    throw InvalidInput("normalization constant must be > 0");
}

Eigen::ArrayXd poisson_sigma(const CorrelationHistogram& h) {
  return h.counts.cast<double>().max(1.0).sqrt() / h.baseline();
}

}  // namespace

DifferenceCurve difference_curve(const CorrelationHistogram& h_orth,
                                 const CorrelationHistogram& h_par) {
  require_normalized_pair(h_orth, h_par);
  const Eigen::ArrayXd& go = *h_orth.normalized;
  const Eigen::ArrayXd& gp = *h_par.normalized;
  const Eigen::ArrayXd so = poisson_sigma(h_orth);
  const Eigen::ArrayXd sp = poisson_sigma(h_par);

  DifferenceCurve out;
  out.tau = h_orth.bin_centers;
  out.value.resize(go.size());
  out.sigma.resize(go.size());
  out.defined.resize(go.size());
  for (Eigen::Index i = 0; i < go.size(); ++i) {
    if (go[i] == 0.0) {
      out.value[i] = kNaN;
      out.sigma[i] = kNaN;
      out.defined[i] = false;
      continue;
    }
    const double ratio = gp[i] / go[i];
    const double rel_o = so[i] / go[i];
    const double rel_p = sp[i] / go[i];
    out.value[i] = (go[i] - gp[i]) / go[i];
    out.sigma[i] = std::sqrt(ratio * ratio * rel_o * rel_o + rel_p * rel_p);
    out.defined[i] = true;
  }
  return out;
}

double v0_from_histograms(const CorrelationHistogram& h_par, const CorrelationHistogram& h_orth,
                          double window) {
  require_normalized_pair(h_par, h_orth);
  if (!(window >= h_par.bin_width * (1.0 - 1e-9)))
    throw InvalidInput("v0 window must be at least one bin wide");
  const double half = 0.5 * window * (1.0 + 1e-9);
  double sum_p = 0.0;
  double sum_o = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < h_par.size(); ++i) {
    if (std::abs(h_par.bin_centers[i]) > half) continue;
    sum_p += (*h_par.normalized)[i];
    sum_o += (*h_orth.normalized)[i];
    ++n;
  }
  if (n == 0) throw InvalidInput("no bins inside the v0 window");
  return visibility(sum_o / n, sum_p / n);
}

ModelCurves hom_model(const Eigen::ArrayXd& bin_centers, double bin_width,
                      const FitParameters& params, double gamma_spon, double theta,
                      double irf_fwhm, int oversample) {
  const double sigma = fwhm_to_sigma(irf_fwhm);
  const double source_rate = params.w_p + gamma_spon;
  const double coherence_rate = gamma_spon + 2.0 * params.gamma_pure;
  BeamSplitterConfig bs;
  bs.theta = theta;
  const double weight = params.mode_match * bs.interference_coefficient();
  const int k = std::max(1, oversample);

  ModelCurves out;
  out.parallel.resize(bin_centers.size());
  out.orthogonal.resize(bin_centers.size());
  for (Eigen::Index i = 0; i < bin_centers.size(); ++i) {
    double orth = 0.0;
    double dip = 0.0;
    for (int j = 0; j < k; ++j) {
      const double t = bin_centers[i] + bin_width * ((j + 0.5) / k - 0.5);
      orth += 1.0 - 0.5 * gaussian_smeared_decay(t, source_rate, sigma);
      dip += weight * gaussian_smeared_decay(t, coherence_rate, sigma);
    }
    orth /= k;
    dip /= k;
    out.orthogonal[i] = (1.0 - params.background) * orth + params.background;
    out.parallel[i] = (1.0 - params.background) * (orth - dip) + params.background;
  }
  return out;
}

HomFitResult fit_hom_model(const CorrelationHistogram& h_par, const CorrelationHistogram& h_orth,
                           double gamma_spon, const DetectionConfig& det,
                           const FitParameters& init, const FitOptions& options) {
  require_normalized_pair(h_par, h_orth);
  if (!(gamma_spon > 0.0) || !std::isfinite(gamma_spon))
    throw InvalidInput("gamma_spon must be > 0");
  if (!(options.fit_window > 0.0)) throw InvalidInput("fit window must be > 0");

  std::vector<Eigen::Index> used;
  for (Eigen::Index i = 0; i < h_par.size(); ++i)
    if (std::abs(h_par.bin_centers[i]) <= options.fit_window) used.push_back(i);
  if (used.size() < 5) throw InvalidInput("fit window holds fewer than 5 bins");

  const auto n = static_cast<Eigen::Index>(used.size());
  const Eigen::ArrayXd base_p_all = h_par.baseline();
  const Eigen::ArrayXd base_o_all = h_orth.baseline();
  Eigen::ArrayXd centers(n), counts_p(n), counts_o(n), weight_p(n), weight_o(n), scale_p(n), scale_o(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = used[static_cast<std::size_t>(k)];
    centers[k] = h_par.bin_centers[i];
    counts_p[k] = static_cast<double>(h_par.counts[i]);
    counts_o[k] = static_cast<double>(h_orth.counts[i]);
    scale_p[k] = base_p_all[i];
    scale_o[k] = base_o_all[i];
  }
  weight_p = 1.0 / counts_p.max(1.0);
  weight_o = 1.0 / counts_o.max(1.0);

  const auto objective = [&](const Eigen::VectorXd& x) {
    const FitParameters p = FitParameters::from_vector(x);
    const ModelCurves m = hom_model(centers, h_par.bin_width, p, gamma_spon, options.theta,
                                    det.irf_fwhm_pair, options.oversample);
    return ((counts_p - scale_p * m.parallel).square() * weight_p).sum() +
           ((counts_o - scale_o * m.orthogonal).square() * weight_o).sum();
  };

  const Eigen::Vector4d start = init.as_vector();
  Eigen::Vector4d steps;
  for (int i = 0; i < 4; ++i) steps[i] = 0.1 * std::max(std::abs(start[i]), 0.05);

  Rng rng = make_rng(options.seed, RngStream::fit);
  std::normal_distribution<double> normal(0.0, 1.0);
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  for (int run = 0; run <= std::max(0, options.restarts); ++run) {
    Eigen::Vector4d x0 = start;
    if (run > 0) {
      for (int i = 0; i < 3; ++i) x0[i] = start[i] * std::exp(0.2 * normal(rng));
      x0[3] = start[3] + 0.02 * normal(rng);
    }
    NelderMeadResult r = nelder_mead(objective, x0, steps, options.optimizer);
    evaluations += r.evaluations;
    if (r.value < best.value) best = std::move(r);
  }

  HomFitResult out;
  const FitParameters p = FitParameters::from_vector(best.x);
  out.gamma_spon = gamma_spon;
  out.gamma_pure_hat = p.gamma_pure;
  out.w_p_hat = p.w_p;
  out.contrast_hat = p.mode_match;
  out.background_hat = p.background;
  out.t2_hat = 1.0 / (0.5 * gamma_spon + p.gamma_pure);
  out.rss = best.value;
  out.bins_used = static_cast<int>(2 * n);
  out.evaluations = evaluations;
  out.converged = best.converged;
  out.physical = p.gamma_pure >= 0.0 && p.w_p >= 0.0 && p.mode_match >= 0.0 &&
                 p.mode_match <= 1.0;

  Eigen::VectorXd h(4);
  for (int i = 0; i < 4; ++i) h[i] = 1e-3 * std::max(std::abs(best.x[i]), 1e-2);
  const Eigen::MatrixXd hess = numerical_hessian(objective, best.x, h);
  const Eigen::LLT<Eigen::MatrixXd> llt(hess);
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd cov = 2.0 * llt.solve(Eigen::MatrixXd::Identity(4, 4));
    for (int i = 0; i < 4; ++i) out.stderr_values[static_cast<std::size_t>(i)] =
        cov(i, i) > 0.0 ? std::sqrt(cov(i, i)) : kNaN;
  } else {
    out.stderr_values.fill(kNaN);
  }

  double window = options.v0_window.value_or(det.irf_fwhm_pair);
  window = std::max(window, h_par.bin_width);
  const double half = 0.5 * window * (1.0 + 1e-9);
  std::vector<double> near;
  for (Eigen::Index i = 0; i < h_par.size(); ++i)
    if (std::abs(h_par.bin_centers[i]) <= half) near.push_back(h_par.bin_centers[i]);
  if (near.empty()) near.push_back(0.0);
  const Eigen::ArrayXd near_centers = Eigen::Map<const Eigen::ArrayXd>(
      near.data(), static_cast<Eigen::Index>(near.size()));
  const ModelCurves m = hom_model(near_centers, h_par.bin_width, p, gamma_spon, options.theta,
                                  det.irf_fwhm_pair, options.oversample);
  out.v0_hat = visibility(m.orthogonal.mean(), m.parallel.mean());

  BeamSplitterConfig bs;
  bs.theta = options.theta;
  out.v0_intrinsic = 2.0 * p.mode_match * bs.interference_coefficient();
  return out;
}

}  // namespace hom
