#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "ipg/simplex.hpp"

namespace ipg {

/// Stochastic projected gradient descent settings for the least-squares fit.
struct RegressionConfig {
  double weight_bound = 1.0;  // W
  int inner_steps = 0;        // K_inner; 0 uses the sample count
};

/// Default weight bound sqrt(d) / (1 - gamma).
inline double default_weight_bound(int dim, double gamma) { return std::sqrt(static_cast<double>(dim)) / (1.0 - gamma); }

/// Least-squares fit of targets on features inside the ball ||w|| <= W.
///
/// Starts from w^(0) = 0 and, for k = 0 .. K-1, draws a row uniformly with
/// replacement and steps
///   w^(k+1) = Proj_W(w^(k) - lambda_k * 2 (<phi, w^(k)> - R) phi),  lambda_k = 2 / (2 + k).
/// Returns sum_{k=0..K} beta_k w^(k) with beta_k proportional to 1 / lambda_k.
/// `features` holds one row per sample.
template <class Urbg>
Eigen::VectorXd spgd_regress(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                             const RegressionConfig& config, Urbg& rng) {
  const Eigen::Index count = features.rows();
  if (count == 0) throw std::invalid_argument("spgd_regress: empty sample set");
  if (targets.size() != count) throw std::invalid_argument("spgd_regress: feature/target count mismatch");
  if (!(config.weight_bound > 0.0)) throw std::invalid_argument("spgd_regress: W must be > 0");
  const int steps = config.inner_steps > 0 ? config.inner_steps : static_cast<int>(count);

  std::uniform_int_distribution<Eigen::Index> pick(0, count - 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(features.cols());
  Eigen::VectorXd weighted_sum = Eigen::VectorXd::Zero(features.cols());
  double weight_total = 1.0;  // beta weight of w^(0) = 0 is 1 / lambda_0 = 1
  for (int k = 0; k < steps; ++k) {
    const Eigen::Index row = pick(rng);
    const double lambda = 2.0 / (2.0 + k);
    const double residual = features.row(row).dot(w) - targets[row];
    w = project_ball(w - lambda * 2.0 * residual * features.row(row).transpose(), config.weight_bound);
    const double beta = (2.0 + (k + 1)) / 2.0;  // 1 / lambda_{k+1}
    weighted_sum += beta * w;
    weight_total += beta;
  }
  Eigen::VectorXd average = weighted_sum / weight_total;
  // the average of ball points stays in the ball; guard against rounding
  return project_ball(average, config.weight_bound);
}

}  // namespace ipg
