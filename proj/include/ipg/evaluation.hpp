#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ipg/game.hpp"

namespace ipg {

/// Above this state count policy evaluation switches from a dense LU solve to a
/// truncated Neumann series.
inline constexpr int kDenseSolveMaxStates = 2000;

/// Exact values of a joint policy.
struct ValueProfile {
  /// V_i(s), one vector of length S per player.
  std::vector<Eigen::VectorXd> values;
  /// Q_i(s, joint action) as an S x A^N matrix per player.
  std::vector<Eigen::MatrixXd> action_values;
  /// Averaged Q_i(s, a_i) as an S x A matrix per player.
  std::vector<Eigen::MatrixXd> averaged;

  double value_at(int player, const Eigen::VectorXd& dist) const { return values[player].dot(dist); }
};

/// Single-agent MDP seen by one player when the others are fixed.
struct MarginalMdp {
  Eigen::MatrixXd reward;                   // S x A
  std::vector<Eigen::MatrixXd> transition;  // per state: A x S
};

/// The Markov chain and per-player reward vectors induced by a joint policy.
struct InducedChain {
  Eigen::MatrixXd transition;            // S x S
  std::vector<Eigen::VectorXd> rewards;  // per player, length S
};

namespace detail {

/// Calls fn(joint, full_prob, others, actions) for every joint action at state s,
/// where others[i] is the probability of the other players' actions under the
/// policy and actions holds the decoded digits of joint.
template <class Fn>
void for_each_joint(const MarkovGame& game, const JointPolicy& policy, int s, Fn&& fn) {
  const auto& codec = game.codec();
  const int n = game.num_players();
  const int num_actions = game.num_actions();
  std::vector<double> prefix_buf(n + 1), suffix_buf(n + 1), others_buf(n);
  std::vector<int> actions_buf(n, 0);
  double* prefix = prefix_buf.data();
  double* suffix = suffix_buf.data();
  double* others = others_buf.data();
  int* actions = actions_buf.data();
  // each player's row at s, flattened to contiguous storage
  std::vector<double> rows(static_cast<std::size_t>(n) * num_actions);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < num_actions; ++a) rows[static_cast<std::size_t>(i) * num_actions + a] = policy[i](s, a);
  }
  const double* table = rows.data();
  prefix[0] = 1.0;
  suffix[n] = 1.0;
  for (std::size_t joint = 0; joint < codec.size(); ++joint) {
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * table[i * num_actions + actions[i]];
    for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * table[i * num_actions + actions[i]];
    for (int i = 0; i < n; ++i) others[i] = prefix[i] * suffix[i + 1];
    fn(joint, prefix[n], static_cast<const double*>(others), static_cast<const int*>(actions));
    // advance the base-A odometer, player 0 least significant
    for (int i = 0; i < n && ++actions[i] == num_actions; ++i) actions[i] = 0;
  }
}

/// Solves (I - gamma P) X = R for every column of R.
inline Eigen::MatrixXd solve_discounted(const Eigen::MatrixXd& chain, const Eigen::MatrixXd& rhs, double gamma) {
  const auto states = chain.rows();
  if (states <= kDenseSolveMaxStates) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(states, states) - gamma * chain;
    return system.partialPivLu().solve(rhs);
  }
  // Neumann series X = sum_k (gamma P)^k R, truncated once the increment is below 1e-10.
  Eigen::MatrixXd x = rhs;
  Eigen::MatrixXd term = rhs;
  while (term.cwiseAbs().maxCoeff() > 1e-10 * (1.0 - gamma)) {
    term = gamma * (chain * term);
    x += term;
  }
  return x;
}

}  // namespace detail

/// P_pi and r_{i,pi} for the joint policy.
inline InducedChain induced_chain(const MarkovGame& game, const JointPolicy& policy) {
  policy.check_compatible(game);
  const int states = game.num_states();
  const int n = game.num_players();
  InducedChain chain{Eigen::MatrixXd::Zero(states, states),
                     std::vector<Eigen::VectorXd>(n, Eigen::VectorXd::Zero(states))};
  std::vector<const double*> reward_rows(n);
  std::vector<double> reward_buf(n), next_buf(states);
  double* reward_acc = reward_buf.data();
  double* next_acc = next_buf.data();
  for (int s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) reward_rows[i] = game.reward_row(i, s);
    std::fill(reward_buf.begin(), reward_buf.end(), 0.0);
    std::fill(next_buf.begin(), next_buf.end(), 0.0);
    detail::for_each_joint(game, policy, s, [&](std::size_t joint, double prob, const double*, const int*) {
      if (prob == 0.0) return;
      const double* row = game.transition_row(s, joint);
      for (int next = 0; next < states; ++next) next_acc[next] += prob * row[next];
      for (int i = 0; i < n; ++i) reward_acc[i] += prob * reward_rows[i][joint];
    });
    for (int next = 0; next < states; ++next) chain.transition(s, next) = next_acc[next];
    for (int i = 0; i < n; ++i) chain.rewards[i][s] = reward_acc[i];
  }
  return chain;
}

/// Marginalizes transitions and rewards over the other players' policies, for every player.
inline std::vector<MarginalMdp> marginalize(const MarkovGame& game, const JointPolicy& policy) {
  policy.check_compatible(game);
  const int states = game.num_states();
  const int actions = game.num_actions();
  const int n = game.num_players();
  // accumulate in flat per-player buffers laid out [s][a][next]
  std::vector<std::vector<double>> reward_acc(n, std::vector<double>(static_cast<std::size_t>(states) * actions, 0.0));
  std::vector<std::vector<double>> trans_acc(
      n, std::vector<double>(static_cast<std::size_t>(states) * actions * states, 0.0));
  std::vector<const double*> reward_rows(n);
  for (int s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) reward_rows[i] = game.reward_row(i, s);
    detail::for_each_joint(game, policy, s, [&](std::size_t joint, double, const double* others, const int* digits) {
      const double* row = game.transition_row(s, joint);
      for (int i = 0; i < n; ++i) {
        const double w = others[i];
        if (w == 0.0) continue;
        const std::size_t sa = static_cast<std::size_t>(s) * actions + digits[i];
        reward_acc[i][sa] += w * reward_rows[i][joint];
        double* next_row = trans_acc[i].data() + sa * states;
        for (int next = 0; next < states; ++next) next_row[next] += w * row[next];
      }
    });
  }
  std::vector<MarginalMdp> mdps(n);
  for (int i = 0; i < n; ++i) {
    mdps[i].reward = Eigen::MatrixXd(states, actions);
    mdps[i].transition.assign(states, Eigen::MatrixXd(actions, states));
    for (int s = 0; s < states; ++s) {
      for (int a = 0; a < actions; ++a) {
        const std::size_t sa = static_cast<std::size_t>(s) * actions + a;
        mdps[i].reward(s, a) = reward_acc[i][sa];
        for (int next = 0; next < states; ++next) mdps[i].transition[s](a, next) = trans_acc[i][sa * states + next];
      }
    }
  }
  return mdps;
}

namespace detail {

inline Eigen::MatrixXd backup(const MarginalMdp& mdp, const Eigen::VectorXd& values, double gamma) {
  Eigen::MatrixXd q = mdp.reward;
  for (Eigen::Index s = 0; s < q.rows(); ++s) q.row(s) += gamma * (mdp.transition[s] * values).transpose();
  return q;
}

}  // namespace detail

/// State values of every player (one linear solve shared across players).
inline std::vector<Eigen::VectorXd> state_values(const MarkovGame& game, const JointPolicy& policy) {
  const auto chain = induced_chain(game, policy);
  const int n = game.num_players();
  Eigen::MatrixXd rhs(game.num_states(), n);
  for (int i = 0; i < n; ++i) rhs.col(i) = chain.rewards[i];
  const Eigen::MatrixXd solved = detail::solve_discounted(chain.transition, rhs, game.discount());
  std::vector<Eigen::VectorXd> values(n);
  for (int i = 0; i < n; ++i) values[i] = solved.col(i);
  return values;
}

/// V_i and averaged Q_i only; the learners' hot path.
struct AveragedValues {
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> averaged;
};

inline AveragedValues averaged_values(const MarkovGame& game, const JointPolicy& policy) {
  AveragedValues out;
  out.values = state_values(game, policy);
  const auto mdps = marginalize(game, policy);
  out.averaged.reserve(mdps.size());
  for (std::size_t i = 0; i < mdps.size(); ++i) {
    out.averaged.push_back(detail::backup(mdps[i], out.values[i], game.discount()));
  }
  return out;
}

/// Exact V_i, Q_i and averaged Q_i for every player.
inline ValueProfile evaluate(const MarkovGame& game, const JointPolicy& policy) {
  ValueProfile profile;
  auto averaged = averaged_values(game, policy);
  profile.values = std::move(averaged.values);
  profile.averaged = std::move(averaged.averaged);

  const int states = game.num_states();
  const auto joints = static_cast<Eigen::Index>(game.num_joint_actions());
  const double gamma = game.discount();
  for (int i = 0; i < game.num_players(); ++i) {
    Eigen::MatrixXd q(states, joints);
    const Eigen::VectorXd& v = profile.values[i];
    for (int s = 0; s < states; ++s) {
      for (Eigen::Index j = 0; j < joints; ++j) {
        const auto joint = static_cast<std::size_t>(j);
        q(s, j) = game.reward(i, s, joint) +
                  gamma * Eigen::Map<const Eigen::VectorXd>(game.transition_row(s, joint), states).dot(v);
      }
    }
    profile.action_values.push_back(std::move(q));
  }
  return profile;
}

/// Discounted state visitation from a start distribution.
struct VisitationDistribution {
  Eigen::VectorXd distribution;
  Eigen::VectorXd start;
};

/// d = (1 - gamma) mu^T (I - gamma P_pi)^{-1}, renormalized.
inline VisitationDistribution visitation(const MarkovGame& game, const JointPolicy& policy,
                                         const Eigen::VectorXd& mu) {
  if (mu.size() != game.num_states()) {
    throw InvariantError(fmt::format("start distribution has {} entries, expected {}", mu.size(), game.num_states()));
  }
  const auto chain = induced_chain(game, policy);
  const double gamma = game.discount();
  Eigen::MatrixXd transposed = chain.transition.transpose();
  Eigen::VectorXd d = (1.0 - gamma) * detail::solve_discounted(transposed, mu, gamma);
  d /= d.sum();
  return {d, mu};
}

/// Optimal value and deterministic policy of a player against fixed opponents.
struct BestResponse {
  double value = 0.0;           // V*(rho)
  Eigen::VectorXd state_values;  // V*(s)
  PlayerPolicy policy;           // deterministic S x A
};

/// Stopping threshold on gamma * ||V_{k+1} - V_k|| / (1 - gamma).
inline constexpr double kBestResponseTolerance = 1e-9;

/// Value iteration on a single-agent MDP from V = 0; greedy ties go to the lowest action.
inline BestResponse solve_mdp(const MarginalMdp& mdp, double gamma, const Eigen::VectorXd& rho) {
  const auto states = mdp.reward.rows();
  const auto actions = mdp.reward.cols();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(states);
  Eigen::MatrixXd q;
  while (true) {
    q = detail::backup(mdp, v, gamma);
    Eigen::VectorXd next = q.rowwise().maxCoeff();
    const double residual = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (gamma == 0.0 || gamma * residual / (1.0 - gamma) <= kBestResponseTolerance) break;
  }
  q = detail::backup(mdp, v, gamma);
  BestResponse br;
  br.policy = PlayerPolicy::Zero(states, actions);
  Eigen::MatrixXd greedy_chain(states, states);
  Eigen::VectorXd greedy_reward(states);
  for (Eigen::Index s = 0; s < states; ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < actions; ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    br.policy(s, best) = 1.0;
    greedy_chain.row(s) = mdp.transition[s].row(best);
    greedy_reward[s] = mdp.reward(s, best);
  }
  // value iteration from 0 approaches V* from below; the exact value of the
  // greedy policy removes that bias when the greedy policy is optimal
  const Eigen::VectorXd greedy = detail::solve_discounted(greedy_chain, greedy_reward, gamma);
  br.state_values = v.cwiseMax(greedy);
  br.value = br.state_values.dot(rho);
  return br;
}

inline BestResponse best_response(const MarkovGame& game, const JointPolicy& policy, int player) {
  if (player < 0 || player >= game.num_players()) {
    throw std::out_of_range(fmt::format("player index {} out of range", player));
  }
  const auto mdps = marginalize(game, policy);
  return solve_mdp(mdps[player], game.discount(), game.initial_distribution());
}

/// Per-player best-response gaps at rho.
struct NashGapReport {
  std::vector<double> per_player_gap;
  double max_gap = 0.0;
  std::vector<double> values;  // V_i^pi(rho)
  std::vector<PlayerPolicy> best_response_policies;
};

inline NashGapReport nash_gap(const MarkovGame& game, const JointPolicy& policy) {
  const auto values = state_values(game, policy);
  const auto mdps = marginalize(game, policy);
  const auto& rho = game.initial_distribution();
  NashGapReport report;
  report.max_gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.num_players(); ++i) {
    auto br = solve_mdp(mdps[i], game.discount(), rho);
    const double own = values[i].dot(rho);
    const double gap = br.value - own;
    report.values.push_back(own);
    report.per_player_gap.push_back(gap);
    report.best_response_policies.push_back(std::move(br.policy));
    report.max_gap = std::max(report.max_gap, gap);
  }
  return report;
}

/// Estimate of the distribution mismatch coefficient: the maximum of
/// ||d_mu^pi / mu||_inf over all deterministic joint policies.
///
/// This is an estimate over extreme points, not a certified supremum over
/// stochastic policies. Throws if the enumeration exceeds `budget`.
inline double estimate_kappa(const MarkovGame& game, const Eigen::VectorXd& mu, double budget = 1e6) {
  const int states = game.num_states();
  if (mu.size() != states) throw InvariantError("estimate_kappa: start distribution has wrong size");
  if ((mu.array() <= 0.0).any()) throw InvariantError("estimate_kappa: mu must be strictly positive");
  const double joints = static_cast<double>(game.num_joint_actions());
  const double count = std::pow(joints, states);
  if (count > budget) {
    throw std::length_error(
        fmt::format("estimate_kappa: {:.0f} deterministic joint policies exceed the budget of {:.0f}", count, budget));
  }
  const double gamma = game.discount();
  std::vector<std::size_t> choice(states, 0);
  Eigen::MatrixXd chain(states, states);
  double kappa = 0.0;
  while (true) {
    for (int s = 0; s < states; ++s) {
      chain.row(s) = Eigen::Map<const Eigen::RowVectorXd>(game.transition_row(s, choice[s]), states);
    }
    Eigen::MatrixXd transposed = chain.transpose();
    Eigen::VectorXd d = (1.0 - gamma) * detail::solve_discounted(transposed, mu, gamma);
    kappa = std::max(kappa, (d.array() / mu.array()).maxCoeff());

    int s = 0;
    while (s < states && ++choice[s] == game.num_joint_actions()) choice[s++] = 0;
    if (s == states) break;
  }
  return kappa;
}

}  // namespace ipg
