#ifndef HOM_OPTIMIZE_HPP
#define HOM_OPTIMIZE_HPP

#include <Eigen/Core>

#include <functional>

namespace hom {

struct NelderMeadOptions {
  /// Stop when (f_worst - f_best) <= relative_tolerance * |f_best|.
  double relative_tolerance = 1e-10;
  int max_evaluations = 10000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimisation (standard reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). `steps` sets the initial simplex edge along
/// each coordinate.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, const Eigen::VectorXd& steps,
                             const NelderMeadOptions& options = {});

/// Central finite-difference Hessian with per-coordinate step h.
Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& h);

}  // namespace hom

#endif  // HOM_OPTIMIZE_HPP
