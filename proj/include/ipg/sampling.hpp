#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "ipg/game.hpp"

namespace ipg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic child seed for (parent, index); distinct indices give unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Draws the number of failures before the first success with success
/// probability 1 - gamma: P(h = k) = (1 - gamma) gamma^k, k = 0, 1, ...
template <class Urbg>
int sample_geometric(Urbg& rng, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument(fmt::format("sample_geometric: gamma {} outside [0, 1)", gamma));
  }
  if (gamma == 0.0) return 0;
  std::geometric_distribution<int> dist(1.0 - gamma);
  return dist(rng);
}

/// Inverse-CDF draw from a discrete distribution given as any indexable row.
template <class Urbg, class Row>
int sample_categorical(Urbg& rng, const Row& probs, Eigen::Index size) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k + 1 < size; ++k) {
    cumulative += probs[k];
    if (u < cumulative) return static_cast<int>(k);
  }
  // mass of trailing zero-probability entries must not be selected
  Eigen::Index last = size - 1;
  while (last > 0 && probs[last] == 0.0) --last;
  return static_cast<int>(last);
}

/// One player's regression sample: state, own action and windowed return.
struct SampleTuple {
  int state = 0;
  int action = 0;
  double ret = 0.0;
};

/// Per-player sample lists from one batch; samples[i][k] belongs to round k.
using SampleBatch = std::vector<std::vector<SampleTuple>>;

/// Collects K rounds of geometric-horizon samples under the joint policy.
///
/// Each round draws h_i ~ Geometric(1 - gamma) on {0, 1, ...} and a window
/// length h'_i on {1, 2, ...} for every player, rolls one shared trajectory from
/// rho for H = max_i(h_i + h'_i) steps and emits, per player, the state and own
/// action at step h_i with the undiscounted reward sum over steps
/// h_i .. h_i + h'_i - 1. Round k draws from its own stream derive_seed(seed, k).
inline SampleBatch collect_batch(const MarkovGame& game, const JointPolicy& policy, int rounds,
                                 std::uint64_t seed) {
  policy.check_compatible(game);
  if (rounds < 0) throw std::invalid_argument("collect_batch: K must be >= 0");
  const int n = game.num_players();
  const double gamma = game.discount();
  const auto& codec = game.codec();
  const auto& rho = game.initial_distribution();

  SampleBatch batch(n);
  for (auto& list : batch) list.reserve(static_cast<std::size_t>(rounds));

  std::vector<int> start(n), window(n);
  std::vector<int> states;
  std::vector<std::size_t> joints;
  std::vector<int> actions(n);
  for (int k = 0; k < rounds; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    int horizon = 0;
    for (int i = 0; i < n; ++i) {
      start[i] = sample_geometric(rng, gamma);
      window[i] = 1 + sample_geometric(rng, gamma);
      horizon = std::max(horizon, start[i] + window[i]);
    }

    states.clear();
    joints.clear();
    int s = sample_categorical(rng, rho, rho.size());
    for (int h = 0; h < horizon; ++h) {
      for (int i = 0; i < n; ++i) actions[i] = sample_categorical(rng, policy[i].row(s), game.num_actions());
      const std::size_t joint = codec.encode(actions);
      states.push_back(s);
      joints.push_back(joint);
      s = sample_categorical(rng, game.transition_row(s, joint), game.num_states());
    }

    for (int i = 0; i < n; ++i) {
      double ret = 0.0;
      for (int h = start[i]; h < start[i] + window[i]; ++h) ret += game.reward(i, states[h], joints[h]);
      batch[i].push_back({states[start[i]], codec.action(joints[start[i]], i), ret});
    }
  }
  return batch;
}

}  // namespace ipg
