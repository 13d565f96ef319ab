#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

namespace ipg {

/// Raised when a game or policy violates one of its structural invariants.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row tolerance: rows within this distance of summing to one are renormalized.
inline constexpr double kRenormalizeTolerance = 1e-9;

/// Base-A encoding of joint actions; player 0 is the least-significant digit.
class JointActionCodec {
 public:
  JointActionCodec() = default;
  JointActionCodec(int num_players, int num_actions)
      : num_players_(num_players), num_actions_(num_actions), strides_(num_players) {
    std::size_t stride = 1;
    for (int i = 0; i < num_players; ++i) {
      strides_[i] = stride;
      stride *= static_cast<std::size_t>(num_actions);
    }
    size_ = stride;
  }

  int num_players() const { return num_players_; }
  int num_actions() const { return num_actions_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int player) const { return strides_[player]; }

  int action(std::size_t joint, int player) const {
    return static_cast<int>((joint / strides_[player]) % static_cast<std::size_t>(num_actions_));
  }

  std::size_t encode(const std::vector<int>& actions) const {
    std::size_t joint = 0;
    for (int i = 0; i < num_players_; ++i) joint += strides_[i] * static_cast<std::size_t>(actions[i]);
    return joint;
  }

  std::vector<int> decode(std::size_t joint) const {
    std::vector<int> actions(num_players_);
    for (int i = 0; i < num_players_; ++i) actions[i] = action(joint, i);
    return actions;
  }

  /// Joint index with `player`'s digit replaced by `a`.
  std::size_t with_action(std::size_t joint, int player, int a) const {
    const auto current = static_cast<std::size_t>(action(joint, player));
    return joint - current * strides_[player] + static_cast<std::size_t>(a) * strides_[player];
  }

 private:
  int num_players_ = 0;
  int num_actions_ = 0;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

namespace detail {

/// Checks a probability row, renormalizing in place if it is within tolerance.
/// Returns an empty string on success, a diagnostic otherwise.
template <class Row>
std::string check_distribution(Row&& row, double tolerance = kRenormalizeTolerance) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    const double p = row[k];
    if (!std::isfinite(p)) return fmt::format("entry {} is not finite", k);
    if (p < 0.0) return fmt::format("entry {} is negative ({})", k, p);
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) return fmt::format("sums to {:.17g}, not 1", sum);
  if (sum == 1.0) return {};
  for (Eigen::Index k = 0; k < row.size(); ++k) row[k] /= sum;
  return {};
}

}  // namespace detail

/// Tabular N-player Markov game with a shared action count per player.
///
/// Transition probabilities are stored densely as [state][joint action][next state]
/// and rewards as [player][state][joint action]. Instances are immutable once
/// constructed; the constructor validates every invariant.
class MarkovGame {
 public:
  MarkovGame(int num_players, int num_states, int num_actions, std::vector<double> transition,
             std::vector<double> rewards, double discount, Eigen::VectorXd initial_dist)
      : codec_(validate_sizes(num_players, num_states, num_actions)),
        num_states_(num_states),
        transition_(std::move(transition)),
        rewards_(std::move(rewards)),
        discount_(discount),
        initial_(std::move(initial_dist)) {
    validate();
  }

  int num_players() const { return codec_.num_players(); }
  int num_states() const { return num_states_; }
  int num_actions() const { return codec_.num_actions(); }
  std::size_t num_joint_actions() const { return codec_.size(); }
  const JointActionCodec& codec() const { return codec_; }
  double discount() const { return discount_; }
  const Eigen::VectorXd& initial_distribution() const { return initial_; }

  double transition(int s, std::size_t joint, int next) const {
    return transition_[transition_offset(s, joint) + static_cast<std::size_t>(next)];
  }
  /// Contiguous next-state distribution for (s, joint).
  const double* transition_row(int s, std::size_t joint) const {
    return transition_.data() + transition_offset(s, joint);
  }
  double reward(int player, int s, std::size_t joint) const {
    return rewards_[reward_offset(player, s) + joint];
  }
  const double* reward_row(int player, int s) const { return rewards_.data() + reward_offset(player, s); }

  const std::vector<double>& transition_data() const { return transition_; }
  const std::vector<double>& reward_data() const { return rewards_; }

  /// True when every player receives the same reward tensor.
  bool identical_rewards() const {
    const std::size_t block = static_cast<std::size_t>(num_states_) * codec_.size();
    for (int i = 1; i < num_players(); ++i) {
      for (std::size_t k = 0; k < block; ++k) {
        if (rewards_[k] != rewards_[static_cast<std::size_t>(i) * block + k]) return false;
      }
    }
    return true;
  }

  /// A copy with a different initial distribution.
  MarkovGame with_initial_distribution(Eigen::VectorXd rho) const {
    MarkovGame copy = *this;
    if (rho.size() != num_states_) {
      throw InvariantError(fmt::format("initial distribution has {} entries, expected {}", rho.size(), num_states_));
    }
    if (auto err = detail::check_distribution(rho); !err.empty()) throw InvariantError("initial distribution " + err);
    copy.initial_ = std::move(rho);
    return copy;
  }

 private:
  static JointActionCodec validate_sizes(int n, int s, int a) {
    if (n < 1) throw InvariantError("num_players must be >= 1");
    if (s < 1) throw InvariantError("num_states must be >= 1");
    if (a < 1) throw InvariantError("num_actions must be >= 1");
    double joint = std::pow(static_cast<double>(a), n);
    if (joint * s * s > 4e8) {
      throw InvariantError(fmt::format("game too large for dense storage: S={} A^N={}", s, joint));
    }
    return JointActionCodec(n, a);
  }

  std::size_t transition_offset(int s, std::size_t joint) const {
    return (static_cast<std::size_t>(s) * codec_.size() + joint) * static_cast<std::size_t>(num_states_);
  }
  std::size_t reward_offset(int player, int s) const {
    return (static_cast<std::size_t>(player) * static_cast<std::size_t>(num_states_) +
            static_cast<std::size_t>(s)) *
           codec_.size();
  }

  void validate() {
    const std::size_t joints = codec_.size();
    const auto states = static_cast<std::size_t>(num_states_);
    if (transition_.size() != states * joints * states) {
      throw InvariantError(fmt::format("transition tensor has {} entries, expected {}", transition_.size(),
                                       states * joints * states));
    }
    if (rewards_.size() != static_cast<std::size_t>(num_players()) * states * joints) {
      throw InvariantError(fmt::format("reward tensor has {} entries, expected {}", rewards_.size(),
                                       static_cast<std::size_t>(num_players()) * states * joints));
    }
    if (!(discount_ >= 0.0 && discount_ < 1.0)) {
      throw InvariantError(fmt::format("discount {} outside [0, 1)", discount_));
    }
    for (int s = 0; s < num_states_; ++s) {
      for (std::size_t j = 0; j < joints; ++j) {
        Eigen::Map<Eigen::VectorXd> row(transition_.data() + transition_offset(s, j), num_states_);
        if (auto err = detail::check_distribution(row); !err.empty()) {
          throw InvariantError(fmt::format("transition row (s={}, joint_a={}) {}", s, j, err));
        }
      }
    }
    for (int i = 0; i < num_players(); ++i) {
      for (int s = 0; s < num_states_; ++s) {
        for (std::size_t j = 0; j < joints; ++j) {
          const double r = reward(i, s, j);
          if (!(r >= 0.0 && r <= 1.0)) {
            throw InvariantError(
                fmt::format("reward (i={}, s={}, joint_a={}) = {} outside [0, 1]", i, s, j, r));
          }
        }
      }
    }
    if (initial_.size() != num_states_) {
      throw InvariantError(
          fmt::format("initial distribution has {} entries, expected {}", initial_.size(), num_states_));
    }
    if (auto err = detail::check_distribution(initial_); !err.empty()) {
      throw InvariantError("initial distribution " + err);
    }
  }

  JointActionCodec codec_;
  int num_states_;
  std::vector<double> transition_;
  std::vector<double> rewards_;
  double discount_;
  Eigen::VectorXd initial_;
};

/// One player's stochastic policy: an S x A matrix of action probabilities.
using PlayerPolicy = Eigen::MatrixXd;

/// Per-player policies; every row is a distribution over the player's actions.
class JointPolicy {
 public:
  JointPolicy() = default;
  explicit JointPolicy(std::vector<PlayerPolicy> players) : players_(std::move(players)) {
    if (players_.empty()) throw InvariantError("joint policy needs at least one player");
    const auto rows = players_.front().rows();
    const auto cols = players_.front().cols();
    for (std::size_t i = 0; i < players_.size(); ++i) {
      auto& pi = players_[i];
      if (pi.rows() != rows || pi.cols() != cols) {
        throw InvariantError(fmt::format("player {} policy has shape {}x{}, expected {}x{}", i, pi.rows(),
                                         pi.cols(), rows, cols));
      }
      for (Eigen::Index s = 0; s < pi.rows(); ++s) {
        auto row = pi.row(s);
        if (auto err = detail::check_distribution(row); !err.empty()) {
          throw InvariantError(fmt::format("policy row (i={}, s={}) {}", i, s, err));
        }
      }
    }
  }

  static JointPolicy uniform(int num_players, int num_states, int num_actions) {
    return JointPolicy(std::vector<PlayerPolicy>(
        num_players, PlayerPolicy::Constant(num_states, num_actions, 1.0 / num_actions)));
  }
  static JointPolicy uniform(const MarkovGame& game) {
    return uniform(game.num_players(), game.num_states(), game.num_actions());
  }

  int num_players() const { return static_cast<int>(players_.size()); }
  int num_states() const { return players_.empty() ? 0 : static_cast<int>(players_.front().rows()); }
  int num_actions() const { return players_.empty() ? 0 : static_cast<int>(players_.front().cols()); }

  const PlayerPolicy& operator[](int player) const { return players_[player]; }
  const std::vector<PlayerPolicy>& players() const { return players_; }

  /// Copy with one player's policy replaced.
  JointPolicy with_player(int player, PlayerPolicy policy) const {
    auto players = players_;
    players[player] = std::move(policy);
    return JointPolicy(std::move(players));
  }

  /// Throws unless the policy matches the game's (N, S, A).
  void check_compatible(const MarkovGame& game) const {
    if (num_players() != game.num_players() || num_states() != game.num_states() ||
        num_actions() != game.num_actions()) {
      throw InvariantError(fmt::format("policy shape (N={}, S={}, A={}) does not match game (N={}, S={}, A={})",
                                       num_players(), num_states(), num_actions(), game.num_players(),
                                       game.num_states(), game.num_actions()));
    }
  }

 private:
  std::vector<PlayerPolicy> players_;
};

/// Mean over players of the entrywise L1 distance between two joint policies.
inline double mean_policy_l1_distance(const JointPolicy& a, const JointPolicy& b) {
  double total = 0.0;
  for (int i = 0; i < a.num_players(); ++i) total += (a[i] - b[i]).cwiseAbs().sum();
  return total / a.num_players();
}

}  // namespace ipg
