#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "ipg/evaluation.hpp"
#include "ipg/game.hpp"
#include "ipg/simplex.hpp"
#include "ipg/trace.hpp"

namespace ipg {

enum class GameMode { kCooperative, kZeroSum };

/// Critic learning-rate schedule: constant alpha, or (H+1) / (6 (H+t)).
struct CriticSchedule {
  enum class Kind { kConstant, kDecaying } kind = Kind::kConstant;
  double alpha = 1.0 / 12.0;  // constant rate, must lie in (0, 1/6)
  double horizon = 0.0;       // H for the decaying rate; 0 selects 1 / (1 - gamma)

  static CriticSchedule constant(double alpha) { return {Kind::kConstant, alpha, 0.0}; }
  static CriticSchedule decaying(double horizon = 0.0) { return {Kind::kDecaying, 0.0, horizon}; }

  double rate(int t, double gamma) const {
    if (kind == Kind::kConstant) return alpha;
    const double h = horizon > 0.0 ? horizon : 1.0 / (1.0 - gamma);
    return (h + 1.0) / (6.0 * (h + static_cast<double>(t)));
  }

  void validate() const {
    if (kind == Kind::kConstant && !(alpha > 0.0 && alpha < 1.0 / 6.0)) {
      throw std::invalid_argument(fmt::format("constant critic rate {} outside (0, 1/6)", alpha));
    }
    if (kind == Kind::kDecaying && horizon < 0.0) throw std::invalid_argument("critic horizon must be >= 0");
  }
};

struct OptimisticConfig {
  double eta = 0.0;
  CriticSchedule schedule;
  GameMode mode = GameMode::kCooperative;
  int iterations = 1;  // T
  int cadence = 0;     // 0 selects default_cadence(game)
};

/// Per-state iterates of the optimistic learner, stored row-wise (S x A).
struct OptimisticState {
  Eigen::MatrixXd x, x_bar, y, y_bar;
  Eigen::VectorXd critic;  // smoothed values, one per state
  int t = 1;

  static OptimisticState initial(int num_states, int num_actions) {
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions);
    return {uniform, uniform, uniform, uniform, Eigen::VectorXd::Zero(num_states), 1};
  }

  JointPolicy policy() const { return JointPolicy({x, y}); }
};

/// Largest stepsize covered by the convergence condition: (1 - gamma) / (32 sqrt(A)).
inline double optimistic_eta_limit(double gamma, int num_actions) {
  return (1.0 - gamma) / (32.0 * std::sqrt(static_cast<double>(num_actions)));
}

/// Stepsize paired with a constant critic rate: (1-gamma)^2 alpha / (32 sqrt(S A)).
inline double optimistic_constant_rate_eta(double gamma, int num_states, int num_actions, double alpha) {
  return (1.0 - gamma) * (1.0 - gamma) * alpha / (32.0 * std::sqrt(static_cast<double>(num_states) * num_actions));
}

/// Returns a warning when eta lies outside the range covered by the convergence condition.
inline std::optional<std::string> optimistic_eta_warning(const MarkovGame& game, double eta) {
  const double limit = optimistic_eta_limit(game.discount(), game.num_actions());
  if (eta > 0.0 && eta <= limit) return std::nullopt;
  return fmt::format("eta = {} is outside (0, {}]; convergence is not covered by theory", eta, limit);
}

namespace detail {

inline void check_two_player(const MarkovGame& game, GameMode mode) {
  if (game.num_players() != 2) {
    throw std::invalid_argument(fmt::format("optimistic learner needs exactly 2 players, got {}", game.num_players()));
  }
  const auto& codec = game.codec();
  std::optional<double> total;
  for (int s = 0; s < game.num_states(); ++s) {
    for (std::size_t j = 0; j < codec.size(); ++j) {
      const double r1 = game.reward(0, s, j);
      const double r2 = game.reward(1, s, j);
      if (mode == GameMode::kCooperative && r1 != r2) {
        throw std::invalid_argument("cooperative mode requires identical rewards");
      }
      if (mode == GameMode::kZeroSum) {
        if (!total) total = r1 + r2;
        if (std::abs(r1 + r2 - *total) > 1e-12) {
          throw std::invalid_argument("zero-sum mode requires r1 + r2 to be constant");
        }
      }
    }
  }
}

}  // namespace detail

/// Critic matrix Q_s(a1, a2) = r_1(s, a) + gamma E_{s'}[V_{s'}].
inline Eigen::MatrixXd critic_matrix(const MarkovGame& game, const Eigen::VectorXd& critic, int s) {
  const int actions = game.num_actions();
  const auto& codec = game.codec();
  const int states = game.num_states();
  Eigen::MatrixXd q(actions, actions);
  for (int a1 = 0; a1 < actions; ++a1) {
    for (int a2 = 0; a2 < actions; ++a2) {
      const std::size_t joint = codec.encode({a1, a2});
      q(a1, a2) = game.reward(0, s, joint) +
                  game.discount() * Eigen::Map<const Eigen::VectorXd>(game.transition_row(s, joint), states).dot(critic);
    }
  }
  return q;
}

/// One iteration of independent optimistic gradient ascent with a smoothed critic.
///
/// Both players take the two-stage proximal step (bar iterate, then the played
/// iterate) against the current opponent; in zero-sum mode the second player
/// descends on player 1's critic. The critic is then mixed toward x^T Q y at the
/// pre-update iterates.
inline OptimisticState step_optimistic(const MarkovGame& game, const OptimisticState& state,
                                       const OptimisticConfig& config) {
  detail::check_two_player(game, config.mode);
  const double eta = config.eta;
  const double alpha = config.schedule.rate(state.t, game.discount());
  const double sign = config.mode == GameMode::kZeroSum ? -1.0 : 1.0;

  OptimisticState next = state;
  for (int s = 0; s < game.num_states(); ++s) {
    const Eigen::MatrixXd q = critic_matrix(game, state.critic, s);
    const Eigen::VectorXd x = state.x.row(s).transpose();
    const Eigen::VectorXd y = state.y.row(s).transpose();
    const Eigen::VectorXd grad_x = q * y;
    const Eigen::VectorXd grad_y = sign * (q.transpose() * x);

    const Eigen::VectorXd x_bar = project_simplex(state.x_bar.row(s).transpose() + eta * grad_x);
    const Eigen::VectorXd y_bar = project_simplex(state.y_bar.row(s).transpose() + eta * grad_y);
    next.x_bar.row(s) = x_bar.transpose();
    next.x.row(s) = project_simplex(x_bar + eta * grad_x).transpose();
    next.y_bar.row(s) = y_bar.transpose();
    next.y.row(s) = project_simplex(y_bar + eta * grad_y).transpose();

    next.critic[s] = (1.0 - alpha) * state.critic[s] + alpha * x.dot(q * y);
  }
  next.t = state.t + 1;
  return next;
}

/// Runs the optimistic iterates from `init`; the trace records last-iterate
/// gaps of (x^(t), y^(t)).
inline LearnTrace run_optimistic(const MarkovGame& game, const OptimisticConfig& config, OptimisticState init) {
  if (config.iterations < 1) throw std::invalid_argument("run_optimistic: T must be >= 1");
  if (!(config.eta > 0.0)) throw std::invalid_argument("run_optimistic: eta must be > 0");
  config.schedule.validate();
  detail::check_two_player(game, config.mode);
  const int cadence = config.cadence > 0 ? config.cadence : default_cadence(game);

  LearnTrace trace;
  if (auto warning = optimistic_eta_warning(game, config.eta)) trace.warnings.push_back(*warning);

  if (init.x.rows() != game.num_states() || init.x.cols() != game.num_actions() || init.critic.size() != game.num_states()) {
    throw std::invalid_argument("run_optimistic: initial state shape does not match the game");
  }
  auto state = std::move(init);
  for (int t = 1; t <= config.iterations; ++t) {
    if (is_evaluation_step(t, config.iterations, cadence)) {
      auto policy = state.policy();
      auto gaps = nash_gap(game, policy);
      trace.records.push_back({t, std::move(policy), std::move(gaps)});
    }
    if (t < config.iterations) state = step_optimistic(game, state, config);
  }
  trace.final_policy = state.policy();
  return trace;
}

/// Runs from the uniform initialization with a zero critic.
inline LearnTrace run_optimistic(const MarkovGame& game, const OptimisticConfig& config) {
  return run_optimistic(game, config, OptimisticState::initial(game.num_states(), game.num_actions()));
}

}  // namespace ipg
