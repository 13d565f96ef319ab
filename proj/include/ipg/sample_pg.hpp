#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "ipg/evaluation.hpp"
#include "ipg/exact_pg.hpp"
#include "ipg/game.hpp"
#include "ipg/regression.hpp"
#include "ipg/sampling.hpp"
#include "ipg/simplex.hpp"
#include "ipg/trace.hpp"

namespace ipg {

/// Per-player linear features phi_i(s, a_i) in R^d, tabulated by row s * A + a.
class FeatureMap {
 public:
  FeatureMap(int num_states, int num_actions, std::vector<Eigen::MatrixXd> tables)
      : num_states_(num_states), num_actions_(num_actions), tables_(std::move(tables)) {
    if (tables_.empty()) throw std::invalid_argument("FeatureMap: no players");
    dim_ = static_cast<int>(tables_.front().cols());
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      const auto& table = tables_[i];
      if (table.rows() != static_cast<Eigen::Index>(num_states) * num_actions || table.cols() != dim_) {
        throw std::invalid_argument(fmt::format("FeatureMap: player {} table has shape {}x{}", i, table.rows(), table.cols()));
      }
      max_norm_ = std::max(max_norm_, table.rowwise().norm().maxCoeff());
    }
    if (max_norm_ > 1.0 + 1e-9) {
      throw std::invalid_argument(fmt::format("FeatureMap: feature norm {} exceeds 1", max_norm_));
    }
  }

  /// Indicator features: d = S * A, phi_i(s, a) = e_{s * A + a}.
  static FeatureMap tabular(int num_players, int num_states, int num_actions) {
    const int d = num_states * num_actions;
    return FeatureMap(num_states, num_actions, std::vector<Eigen::MatrixXd>(num_players, Eigen::MatrixXd::Identity(d, d)));
  }
  static FeatureMap tabular(const MarkovGame& game) {
    return tabular(game.num_players(), game.num_states(), game.num_actions());
  }

  int dim() const { return dim_; }
  int num_players() const { return static_cast<int>(tables_.size()); }
  /// Largest ||phi_i(s, a)|| over the table.
  double max_norm() const { return max_norm_; }

  auto feature(int player, int s, int a) const { return tables_[player].row(static_cast<Eigen::Index>(s) * num_actions_ + a); }
  /// Rows phi_i(s, a) for a = 0..A-1 as an A x d block.
  auto state_block(int player, int s) const {
    return tables_[player].middleRows(static_cast<Eigen::Index>(s) * num_actions_, num_actions_);
  }

 private:
  int num_states_;
  int num_actions_;
  std::vector<Eigen::MatrixXd> tables_;
  int dim_ = 0;
  double max_norm_ = 0.0;
};

/// Updates one player's policy at one state:
/// Proj_{Delta_xi}(pi_i(.|s) + eta * <phi_i(s, .), w_i>).
inline Eigen::VectorXd sample_pg_state_update(const Eigen::VectorXd& row, const FeatureMap& features, int player, int s,
                                              const Eigen::VectorXd& weights, double eta, double xi) {
  const Eigen::VectorXd q_hat = features.state_block(player, s) * weights;
  return project_xi_simplex(row + eta * q_hat, xi);
}

/// Policy update with estimated averaged Q-values, every player and state.
inline JointPolicy step_sample_pg(const JointPolicy& policy, const FeatureMap& features,
                                  const std::vector<Eigen::VectorXd>& weights, double eta, double xi,
                                  double weight_bound) {
  if (!(eta >= 0.0)) throw std::invalid_argument("step_sample_pg: eta must be nonnegative");
  std::vector<PlayerPolicy> next;
  next.reserve(policy.num_players());
  for (int i = 0; i < policy.num_players(); ++i) {
    if (weights[i].norm() > weight_bound + 1e-9) {
      throw std::invalid_argument(
          fmt::format("step_sample_pg: weight norm {} of player {} exceeds W = {}", weights[i].norm(), i, weight_bound));
    }
    PlayerPolicy pi(policy.num_states(), policy.num_actions());
    for (int s = 0; s < policy.num_states(); ++s) {
      pi.row(s) = sample_pg_state_update(policy[i].row(s).transpose(), features, i, s, weights[i], eta, xi).transpose();
    }
    next.push_back(std::move(pi));
  }
  return JointPolicy(std::move(next));
}

/// Default exploration rate min((kappa^2 N A d / ((1-gamma)^4 K))^{1/3}, 1/2),
/// i.e. the eps_stat = d W^2 / ((1-gamma)^2 K) substitution.
inline double default_exploration(double kappa, int num_players, int num_actions, int dim, double gamma, int batch) {
  const double ratio = kappa * kappa * num_players * num_actions * dim / (std::pow(1.0 - gamma, 4) * batch);
  return std::min(std::cbrt(ratio), 0.5);
}

struct SamplePGConfig {
  int iterations = 1;  // T
  int batch = 1;       // K
  double eta = 0.0;
  std::optional<double> xi;            // unset selects default_exploration
  std::optional<double> kappa;         // for the default xi; estimated when unset
  std::optional<double> weight_bound;  // W; unset selects sqrt(d) / (1 - gamma)
  int inner_steps = 0;                 // K_inner; 0 uses K
  std::uint64_t seed = 0;
  int cadence = 0;
  std::optional<FeatureMap> features;  // unset selects tabular indicators
  /// Called with (t, batch) after every data-collection phase.
  std::function<void(int, const SampleBatch&)> on_batch;
};

/// Stream seeds for iteration t: collection and per-player regression streams.
inline std::uint64_t collection_seed(std::uint64_t seed, int t) { return derive_seed(derive_seed(seed, 1), static_cast<std::uint64_t>(t)); }
inline std::uint64_t regression_seed(std::uint64_t seed, int t, int player) {
  return derive_seed(derive_seed(derive_seed(seed, 2), static_cast<std::uint64_t>(t)), static_cast<std::uint64_t>(player));
}

/// Resolves the exploration rate a run will use.
inline double resolve_exploration(const MarkovGame& game, const SamplePGConfig& config, int dim) {
  if (config.xi) return *config.xi;
  double kappa = 1.0;
  if (config.kappa) {
    kappa = *config.kappa;
  } else {
    try {
      kappa = estimate_kappa(game, game.initial_distribution());
    } catch (const std::exception&) {
      kappa = 1.0;  // lower bound when enumeration is infeasible or rho has zeros
    }
  }
  return default_exploration(kappa, game.num_players(), game.num_actions(), dim, game.discount(), config.batch);
}

/// Sample-based independent policy gradient with linear function approximation.
/// Gaps in the trace come from the exact evaluator; the learner only sees samples.
inline LearnTrace run_sample_pg(const MarkovGame& game, const SamplePGConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("run_sample_pg: T must be >= 1");
  if (config.batch < 1) throw std::invalid_argument("run_sample_pg: K must be >= 1");
  if (!(config.eta > 0.0)) throw std::invalid_argument("run_sample_pg: eta must be > 0");
  const FeatureMap features = config.features ? *config.features : FeatureMap::tabular(game);
  if (features.num_players() != game.num_players()) throw std::invalid_argument("run_sample_pg: feature map player count");
  const double xi = resolve_exploration(game, config, features.dim());
  if (!(xi > 0.0 && xi <= 1.0)) throw std::invalid_argument(fmt::format("run_sample_pg: xi = {} outside (0, 1]", xi));
  const double bound = config.weight_bound ? *config.weight_bound : default_weight_bound(features.dim(), game.discount());
  const RegressionConfig regression{bound, config.inner_steps};
  const int cadence = config.cadence > 0 ? config.cadence : default_cadence(game);

  LearnTrace trace;
  JointPolicy policy = JointPolicy::uniform(game);
  for (int t = 1; t <= config.iterations; ++t) {
    if (is_evaluation_step(t, config.iterations, cadence)) {
      trace.records.push_back({t, policy, nash_gap(game, policy)});
    }
    if (t == config.iterations) break;

    const SampleBatch batch = collect_batch(game, policy, config.batch, collection_seed(config.seed, t));
    if (config.on_batch) config.on_batch(t, batch);

    std::vector<Eigen::VectorXd> weights;
    weights.reserve(game.num_players());
    for (int i = 0; i < game.num_players(); ++i) {
      const auto& samples = batch[i];
      Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), features.dim());
      Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
      for (std::size_t k = 0; k < samples.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = features.feature(i, samples[k].state, samples[k].action);
        y[static_cast<Eigen::Index>(k)] = samples[k].ret;
      }
      Rng rng(regression_seed(config.seed, t, i));
      weights.push_back(spgd_regress(x, y, regression, rng));
    }
    policy = step_sample_pg(policy, features, weights, config.eta, xi, bound);
  }
  trace.final_policy = std::move(policy);
  return trace;
}

}  // namespace ipg
