#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "ipg/evaluation.hpp"
#include "ipg/game.hpp"

// Numerical identities used as test oracles. Nothing in the learners calls these.
namespace ipg::oracles {

/// |LHS - RHS| of the single-player performance difference identity:
///   V_i^{hat, -i}(mu) - V_i^{bar, -i}(mu)
///     = 1/(1-gamma) sum_{s,a_i} d_mu^{hat, -i}(s) (hat - bar)(a_i|s) Qbar_i^{bar, -i}(s, a_i)
/// `others` supplies pi_{-i}; its entry for `player` is replaced by hat and bar.
inline double performance_difference_residual(const MarkovGame& game, int player, const PlayerPolicy& hat,
                                              const PlayerPolicy& bar, const JointPolicy& others,
                                              const Eigen::VectorXd& mu) {
  const JointPolicy with_hat = others.with_player(player, hat);
  const JointPolicy with_bar = others.with_player(player, bar);
  const double gamma = game.discount();

  const double lhs = state_values(game, with_hat)[player].dot(mu) - state_values(game, with_bar)[player].dot(mu);

  const Eigen::VectorXd d = visitation(game, with_hat, mu).distribution;
  const Eigen::MatrixXd qbar = averaged_values(game, with_bar).averaged[player];
  const Eigen::MatrixXd diff = hat - bar;
  double rhs = 0.0;
  for (int s = 0; s < game.num_states(); ++s) rhs += d[s] * diff.row(s).dot(qbar.row(s));
  rhs /= (1.0 - gamma);
  return std::abs(lhs - rhs);
}

/// Table of Psi over the 2^N assignments of {old, new} to players; bit i of the
/// index is 1 when player i uses its new policy.
struct DecompositionTable {
  int num_players = 0;
  std::vector<double> values;

  double at(unsigned mask) const { return values.at(mask); }
};

/// |residual| of the multivariate difference decomposition
///   Psi(new) - Psi(old) = sum_i [Psi(new_i, old_-i) - Psi(old)]
///     + sum_{i<j} [Psi(S, new_i, new_j) - Psi(S, old_i, new_j) - Psi(S, new_i, old_j) + Psi(S, old_i, old_j)]
/// where S assigns old to players before j other than i and new to players after j.
inline double decomposition_residual(const DecompositionTable& table) {
  const int n = table.num_players;
  if (n < 1 || n > 30) throw std::invalid_argument("decomposition_residual: unsupported player count");
  const std::size_t expected = std::size_t{1} << n;
  if (table.values.size() != expected) {
    throw std::invalid_argument("decomposition_residual: incomplete table");
  }
  const unsigned all_new = static_cast<unsigned>(expected - 1);
  const double base = table.at(0);

  double rhs = 0.0;
  for (int i = 0; i < n; ++i) rhs += table.at(1u << i) - base;

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // players after j use new; everyone else (including i and j) starts at old
      unsigned ctx = all_new & ~((1u << (j + 1)) - 1u);
      const unsigned bi = 1u << i;
      const unsigned bj = 1u << j;
      rhs += table.at(ctx | bi | bj) - table.at(ctx | bj) - table.at(ctx | bi) + table.at(ctx);
    }
  }
  const double lhs = table.at(all_new) - base;
  return std::abs(lhs - rhs);
}

/// Exact Euclidean projection onto the simplex by enumerating supports: for each
/// nonempty support S, p_S = v_S - (sum v_S - 1) / |S|; keep the feasible
/// candidate nearest to v. Exponential in the dimension; for tests only.
inline Eigen::VectorXd simplex_projection_by_support(const Eigen::VectorXd& v) {
  const auto dim = static_cast<int>(v.size());
  if (dim < 1 || dim > 20) throw std::invalid_argument("simplex_projection_by_support: dimension must be in [1, 20]");
  Eigen::VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << dim); ++mask) {
    double sum = 0.0;
    int size = 0;
    for (int a = 0; a < dim; ++a) {
      if (mask & (1u << a)) {
        sum += v[a];
        ++size;
      }
    }
    const double tau = (sum - 1.0) / size;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
    bool feasible = true;
    for (int a = 0; a < dim && feasible; ++a) {
      if (mask & (1u << a)) {
        p[a] = v[a] - tau;
        feasible = p[a] >= -1e-12;
      } else {
        feasible = v[a] - tau <= 1e-12;
      }
    }
    if (!feasible) continue;
    p = p.cwiseMax(0.0);
    const double dist = (p - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = p;
    }
  }
  return best;
}

}  // namespace ipg::oracles
