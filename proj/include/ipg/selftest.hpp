#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "ipg/envs.hpp"
#include "ipg/evaluation.hpp"
#include "ipg/game.hpp"
#include "ipg/oracles.hpp"
#include "ipg/sampling.hpp"
#include "ipg/simplex.hpp"

// Fast invariant suites behind the `selftest` subcommand.
namespace ipg::selftest {

using Projection = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline PlayerPolicy random_player_policy(int states, int actions, Rng& rng) {
  std::exponential_distribution<double> exponential(1.0);
  PlayerPolicy pi(states, actions);
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) pi(s, a) = exponential(rng);
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

inline JointPolicy random_joint_policy(const MarkovGame& game, Rng& rng) {
  std::vector<PlayerPolicy> players;
  for (int i = 0; i < game.num_players(); ++i) {
    players.push_back(random_player_policy(game.num_states(), game.num_actions(), rng));
  }
  return JointPolicy(std::move(players));
}

}  // namespace detail

inline SuiteResult value_identity_suite(int instances = 20) {
  Rng rng(derive_seed(0x5e1f, 1));
  std::uniform_int_distribution<int> size(1, 3);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const double gamma = k % 2 == 0 ? 0.5 : 0.9;
    const auto game = envs::build_random_general(size(rng), size(rng), size(rng), gamma, rng);
    const auto others = detail::random_joint_policy(game, rng);
    const int player = std::uniform_int_distribution<int>(0, game.num_players() - 1)(rng);
    const auto hat = detail::random_player_policy(game.num_states(), game.num_actions(), rng);
    const auto bar = detail::random_player_policy(game.num_states(), game.num_actions(), rng);
    worst = std::max(worst, oracles::performance_difference_residual(game, player, hat, bar, others,
                                                                     game.initial_distribution()));
  }
  return {"value_identity", worst <= 1e-8, fmt::format("max residual {:.3e}", worst)};
}

inline SuiteResult decomposition_suite(int instances = 50) {
  Rng rng(derive_seed(0x5e1f, 2));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    oracles::DecompositionTable table;
    table.num_players = 2 + k % 3;
    table.values.resize(std::size_t{1} << table.num_players);
    for (double& v : table.values) v = unit(rng);
    worst = std::max(worst, oracles::decomposition_residual(table));
  }
  return {"decomposition", worst <= 1e-12, fmt::format("max residual {:.3e}", worst)};
}

inline SuiteResult projection_suite(const Projection& project, int instances = 200) {
  Rng rng(derive_seed(0x5e1f, 3));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst_oracle = 0.0;
  double worst_idem = 0.0;
  double worst_expand = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int a = dim(rng);
    Eigen::VectorXd v(a), u(a);
    for (int j = 0; j < a; ++j) {
      v[j] = 2.0 * normal(rng);
      u[j] = 2.0 * normal(rng);
    }
    const Eigen::VectorXd p = project(v);
    const Eigen::VectorXd q = project(u);
    if (p.size() != a || !p.allFinite()) return {"projection", false, "wrong size or non-finite output"};
    worst_oracle = std::max(worst_oracle, (p - oracles::simplex_projection_by_support(v)).lpNorm<Eigen::Infinity>());
    worst_idem = std::max(worst_idem, (project(p) - p).lpNorm<Eigen::Infinity>());
    worst_expand = std::max(worst_expand, (p - q).norm() - (v - u).norm());
  }
  const bool ok = worst_oracle <= 1e-9 && worst_idem <= 1e-12 && worst_expand <= 1e-12;
  return {"projection", ok,
          fmt::format("oracle {:.3e}, idempotence {:.3e}, expansion {:.3e}", worst_oracle, worst_idem, worst_expand)};
}

/// Smoke test: windowed returns average to the exact averaged Q within 5 standard errors.
inline SuiteResult unbiasedness_suite(int rounds = 20000) {
  Rng rng(derive_seed(0x5e1f, 4));
  const auto game = envs::build_random_general(2, 2, 2, 0.5, rng);
  const auto policy = detail::random_joint_policy(game, rng);
  const auto exact = averaged_values(game, policy).averaged;
  const auto batch = collect_batch(game, policy, rounds, derive_seed(0x5e1f, 5));
  double worst_z = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(game.num_states(), game.num_actions());
    Eigen::MatrixXd sq = sum;
    Eigen::MatrixXd count = sum;
    for (const auto& sample : batch[i]) {
      sum(sample.state, sample.action) += sample.ret;
      sq(sample.state, sample.action) += sample.ret * sample.ret;
      count(sample.state, sample.action) += 1.0;
    }
    for (int s = 0; s < game.num_states(); ++s) {
      for (int a = 0; a < game.num_actions(); ++a) {
        const double n = count(s, a);
        if (n < 30) continue;
        const double mean = sum(s, a) / n;
        const double var = std::max(sq(s, a) / n - mean * mean, 1e-12);
        worst_z = std::max(worst_z, std::abs(mean - exact[i](s, a)) / std::sqrt(var / n));
      }
    }
  }
  return {"unbiasedness", worst_z <= 5.0, fmt::format("max z-score {:.2f}", worst_z)};
}

/// Runs every suite, prints one line each, and returns the process exit status
/// (0 when all pass, 1 otherwise). `project` replaces the simplex projection
/// under test.
inline int run(std::ostream& out, const Projection& project = [](const Eigen::VectorXd& v) { return project_simplex(v); }) {
  const std::vector<SuiteResult> results{value_identity_suite(), decomposition_suite(), projection_suite(project),
                                         unbiasedness_suite()};
  bool ok = true;
  for (const auto& r : results) {
    out << fmt::format("{:<16}{:<6}{}\n", r.name, r.passed ? "PASS" : "FAIL", r.detail);
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace ipg::selftest
