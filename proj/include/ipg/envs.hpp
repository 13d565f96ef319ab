#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "ipg/game.hpp"

namespace ipg::envs {

/// Two-state congestion game: each state is a congestion game over the same
/// facilities; crowding one facility sends everyone to the distancing state.
struct CongestionSpec {
  static constexpr int kSafe = 0;
  static constexpr int kDistancing = 1;

  int num_players = 8;
  std::vector<double> safe_weights{1.0, 2.0, 4.0, 6.0};
  std::vector<double> distancing_weights{0.5, 1.0, 2.0, 3.0};
  /// Penalty subtracted in the distancing state; unset selects half the raw distancing maximum.
  std::optional<double> penalty;
  double discount = 0.99;
  Eigen::VectorXd initial_dist = Eigen::VectorXd::Constant(2, 0.5);

  int num_actions() const { return static_cast<int>(safe_weights.size()); }
  double resolved_penalty() const {
    return penalty ? *penalty : 0.5 * distancing_weights.back() * num_players;
  }
};

/// Raw (unscaled) reward of a player using facility a with `count` users.
inline double congestion_raw_reward(const CongestionSpec& spec, int state, int action, int count) {
  const auto& weights = state == CongestionSpec::kSafe ? spec.safe_weights : spec.distancing_weights;
  double raw = weights[action] * count;
  if (state == CongestionSpec::kDistancing) raw -= spec.resolved_penalty();
  return raw;
}

inline MarkovGame build_congestion(const CongestionSpec& spec) {
  const int n = spec.num_players;
  const int actions = spec.num_actions();
  if (n < 1) throw std::invalid_argument("congestion: need at least one player");
  if (actions < 1 || static_cast<int>(spec.distancing_weights.size()) != actions) {
    throw std::invalid_argument("congestion: weight vectors must be nonempty and of equal length");
  }
  for (const auto* weights : {&spec.safe_weights, &spec.distancing_weights}) {
    for (int a = 1; a < actions; ++a) {
      if (!((*weights)[a - 1] < (*weights)[a])) {
        throw std::invalid_argument("congestion: facility weights must be strictly increasing");
      }
    }
  }
  const double penalty = spec.resolved_penalty();
  if (!(penalty > 0.0)) throw std::invalid_argument("congestion: penalty must be > 0");
  double raw_max = 0.0;
  for (int a = 0; a < actions; ++a) {
    raw_max = std::max({raw_max, spec.safe_weights[a] * n, spec.distancing_weights[a] * n});
  }
  if (penalty > raw_max) {
    throw std::invalid_argument(fmt::format("congestion: penalty {} exceeds the raw reward maximum {}", penalty, raw_max));
  }

  const JointActionCodec codec(n, actions);
  const std::size_t joints = codec.size();
  constexpr int states = 2;
  std::vector<double> transition(states * joints * states, 0.0);
  std::vector<double> raw(static_cast<std::size_t>(n) * states * joints, 0.0);

  std::vector<int> counts(actions);
  for (std::size_t j = 0; j < joints; ++j) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) ++counts[codec.action(j, i)];
    const int crowd = *std::max_element(counts.begin(), counts.end());
    const int next = 2 * crowd > n ? CongestionSpec::kDistancing : CongestionSpec::kSafe;
    for (int s = 0; s < states; ++s) {
      transition[(s * joints + j) * states + next] = 1.0;
      for (int i = 0; i < n; ++i) {
        const int a = codec.action(j, i);
        raw[(static_cast<std::size_t>(i) * states + s) * joints + j] = congestion_raw_reward(spec, s, a, counts[a]);
      }
    }
  }

  // affine rescale into [0, 1]: r = (raw - lo) / (hi - lo) with lo = min(0, min raw)
  const double lo = std::min(0.0, *std::min_element(raw.begin(), raw.end()));
  const double hi = *std::max_element(raw.begin(), raw.end());
  for (double& r : raw) r = std::clamp((r - lo) / (hi - lo), 0.0, 1.0);

  return MarkovGame(n, states, actions, std::move(transition), std::move(raw), spec.discount, spec.initial_dist);
}

/// Random identical-reward Markov game: Dirichlet(1) transition rows, uniform
/// rewards shared by every player, uniform initial distribution.
template <class Urbg>
MarkovGame build_cooperative_random(int num_states, int num_players, int num_actions, double discount, Urbg& rng) {
  if (num_states < 1 || num_players < 1 || num_actions < 1) {
    throw std::invalid_argument("cooperative_random: sizes must be positive");
  }
  const JointActionCodec codec(num_players, num_actions);
  const std::size_t joints = codec.size();
  const auto states = static_cast<std::size_t>(num_states);
  std::exponential_distribution<double> exponential(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> transition(states * joints * states);
  for (std::size_t row = 0; row < states * joints; ++row) {
    double total = 0.0;
    for (std::size_t next = 0; next < states; ++next) total += transition[row * states + next] = exponential(rng);
    for (std::size_t next = 0; next < states; ++next) transition[row * states + next] /= total;
  }
  std::vector<double> shared(states * joints);
  for (double& r : shared) r = unit(rng);
  std::vector<double> rewards;
  rewards.reserve(shared.size() * static_cast<std::size_t>(num_players));
  for (int i = 0; i < num_players; ++i) rewards.insert(rewards.end(), shared.begin(), shared.end());

  return MarkovGame(num_players, num_states, num_actions, std::move(transition), std::move(rewards), discount,
                    Eigen::VectorXd::Constant(num_states, 1.0 / num_states));
}

/// Random general-sum Markov game: Dirichlet(1) transition rows and independent
/// uniform rewards per player, Dirichlet(1) initial distribution.
template <class Urbg>
MarkovGame build_random_general(int num_states, int num_players, int num_actions, double discount, Urbg& rng) {
  if (num_states < 1 || num_players < 1 || num_actions < 1) {
    throw std::invalid_argument("random_general: sizes must be positive");
  }
  const JointActionCodec codec(num_players, num_actions);
  const std::size_t rows = static_cast<std::size_t>(num_states) * codec.size();
  const auto states = static_cast<std::size_t>(num_states);
  std::exponential_distribution<double> exponential(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> transition(rows * states);
  for (std::size_t row = 0; row < rows; ++row) {
    double total = 0.0;
    for (std::size_t next = 0; next < states; ++next) total += transition[row * states + next] = exponential(rng);
    for (std::size_t next = 0; next < states; ++next) transition[row * states + next] /= total;
  }
  std::vector<double> rewards(rows * static_cast<std::size_t>(num_players));
  for (double& r : rewards) r = unit(rng);
  Eigen::VectorXd rho(num_states);
  for (int s = 0; s < num_states; ++s) rho[s] = exponential(rng);
  rho /= rho.sum();
  return MarkovGame(num_players, num_states, num_actions, std::move(transition), std::move(rewards), discount,
                    std::move(rho));
}

enum class MatrixGameMode { kCooperative, kZeroSum };

/// Single self-looping state with payoff(a1, a2) for the row player. Zero-sum
/// mode gives the column player 1 - payoff, keeping rewards in [0, 1].
inline MarkovGame build_matrix_game(const Eigen::MatrixXd& payoff, MatrixGameMode mode, double discount) {
  if (payoff.rows() != payoff.cols() || payoff.rows() < 1) {
    throw std::invalid_argument("matrix_game: payoff must be square and nonempty");
  }
  if ((payoff.array() < 0.0).any() || (payoff.array() > 1.0).any()) {
    throw std::invalid_argument("matrix_game: payoff entries must lie in [0, 1]");
  }
  const int actions = static_cast<int>(payoff.rows());
  const JointActionCodec codec(2, actions);
  const std::size_t joints = codec.size();
  std::vector<double> transition(joints, 1.0);
  std::vector<double> rewards(2 * joints);
  for (std::size_t j = 0; j < joints; ++j) {
    const double p = payoff(codec.action(j, 0), codec.action(j, 1));
    rewards[j] = p;
    rewards[joints + j] = mode == MatrixGameMode::kCooperative ? p : 1.0 - p;
  }
  return MarkovGame(2, 1, actions, std::move(transition), std::move(rewards), discount, Eigen::VectorXd::Ones(1));
}

}  // namespace ipg::envs
