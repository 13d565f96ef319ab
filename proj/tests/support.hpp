#pragma once

// Independent reference computations for the unit tests. Nothing here calls the
// library's evaluators: chains are assembled by explicit joint-action loops and
// values come from truncated power series.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "ipg/envs.hpp"
#include "ipg/game.hpp"
#include "ipg/sampling.hpp"

namespace support {

inline ipg::PlayerPolicy random_player(int states, int actions, ipg::Rng& rng) {
  std::exponential_distribution<double> exponential(1.0);
  ipg::PlayerPolicy pi(states, actions);
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) pi(s, a) = exponential(rng);
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

inline ipg::JointPolicy random_policy(const ipg::MarkovGame& game, ipg::Rng& rng) {
  std::vector<ipg::PlayerPolicy> players;
  for (int i = 0; i < game.num_players(); ++i) players.push_back(random_player(game.num_states(), game.num_actions(), rng));
  return ipg::JointPolicy(std::move(players));
}

/// Probability of a joint action at state s, by explicit product.
inline double joint_prob(const ipg::MarkovGame& game, const ipg::JointPolicy& policy, int s, std::size_t joint) {
  const auto actions = game.codec().decode(joint);
  double p = 1.0;
  for (int i = 0; i < game.num_players(); ++i) p *= policy[i](s, actions[i]);
  return p;
}

struct Chain {
  Eigen::MatrixXd transition;
  std::vector<Eigen::VectorXd> rewards;
};

inline Chain chain(const ipg::MarkovGame& game, const ipg::JointPolicy& policy) {
  const int states = game.num_states();
  Chain c{Eigen::MatrixXd::Zero(states, states), std::vector<Eigen::VectorXd>(game.num_players(), Eigen::VectorXd::Zero(states))};
  for (int s = 0; s < states; ++s) {
    for (std::size_t j = 0; j < game.num_joint_actions(); ++j) {
      const double p = joint_prob(game, policy, s, j);
      for (int next = 0; next < states; ++next) c.transition(s, next) += p * game.transition(s, j, next);
      for (int i = 0; i < game.num_players(); ++i) c.rewards[i][s] += p * game.reward(i, s, j);
    }
  }
  return c;
}

/// sum_k gamma^k P^k r, truncated when gamma^k < 1e-16.
inline Eigen::VectorXd power_series(const Eigen::MatrixXd& transition, const Eigen::VectorXd& r, double gamma) {
  Eigen::VectorXd total = r;
  Eigen::VectorXd term = r;
  double weight = 1.0;
  while (weight > 1e-16 * (1.0 - gamma)) {
    term = gamma * (transition * term);
    total += term;
    weight *= gamma;
    if (gamma == 0.0) break;
  }
  return total;
}

inline std::vector<Eigen::VectorXd> values(const ipg::MarkovGame& game, const ipg::JointPolicy& policy) {
  const auto c = chain(game, policy);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < game.num_players(); ++i) out.push_back(power_series(c.transition, c.rewards[i], game.discount()));
  return out;
}

/// Qbar_i(s, a_i) by explicit sum over all joint actions.
inline Eigen::MatrixXd averaged_q(const ipg::MarkovGame& game, const ipg::JointPolicy& policy, int player) {
  const auto v = values(game, policy)[player];
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(game.num_states(), game.num_actions());
  for (int s = 0; s < game.num_states(); ++s) {
    for (std::size_t j = 0; j < game.num_joint_actions(); ++j) {
      const auto actions = game.codec().decode(j);
      double others = 1.0;
      for (int k = 0; k < game.num_players(); ++k) {
        if (k != player) others *= policy[k](s, actions[k]);
      }
      double backup = game.reward(player, s, j);
      for (int next = 0; next < game.num_states(); ++next) backup += game.discount() * game.transition(s, j, next) * v[next];
      q(s, actions[player]) += others * backup;
    }
  }
  return q;
}

/// Best value at rho over all A^S deterministic policies of one player.
inline double brute_best_response(const ipg::MarkovGame& game, const ipg::JointPolicy& policy, int player) {
  const int states = game.num_states();
  const int actions = game.num_actions();
  std::vector<int> choice(states, 0);
  double best = -1e300;
  while (true) {
    ipg::PlayerPolicy det = ipg::PlayerPolicy::Zero(states, actions);
    for (int s = 0; s < states; ++s) det(s, choice[s]) = 1.0;
    best = std::max(best, values(game, policy.with_player(player, det))[player].dot(game.initial_distribution()));
    int s = 0;
    while (s < states && ++choice[s] == actions) choice[s++] = 0;
    if (s == states) break;
  }
  return best;
}

}  // namespace support
