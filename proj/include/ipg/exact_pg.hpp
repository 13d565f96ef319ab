#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "ipg/evaluation.hpp"
#include "ipg/game.hpp"
#include "ipg/simplex.hpp"
#include "ipg/trace.hpp"

namespace ipg {

struct ExactPGConfig {
  double eta = 0.0;
  int iterations = 1;  // T
  int cadence = 0;     // 0 selects default_cadence(game)
};

/// Applies one projected ascent step to every row of `policy`, using `direction`
/// (an S x A matrix) as the gradient. Rows are updated independently.
inline PlayerPolicy ascent_rows(const PlayerPolicy& policy, const Eigen::MatrixXd& direction, double eta,
                                double xi = 0.0) {
  PlayerPolicy next(policy.rows(), policy.cols());
  for (Eigen::Index s = 0; s < policy.rows(); ++s) {
    const Eigen::VectorXd target = (policy.row(s) + eta * direction.row(s)).transpose();
    next.row(s) = (xi == 0.0 ? project_simplex(target) : project_xi_simplex(target, xi)).transpose();
  }
  return next;
}

/// One simultaneous independent policy-gradient step from a precomputed
/// averaged-Q snapshot.
inline JointPolicy step_exact_pg(const JointPolicy& policy, const std::vector<Eigen::MatrixXd>& averaged_q,
                                 double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("step_exact_pg: eta must be nonnegative");
  std::vector<PlayerPolicy> next;
  next.reserve(policy.num_players());
  for (int i = 0; i < policy.num_players(); ++i) next.push_back(ascent_rows(policy[i], averaged_q[i], eta));
  return JointPolicy(std::move(next));
}

/// pi_i(.|s) <- Proj_simplex(pi_i(.|s) + eta * Qbar_i(s, .)) for every player and state.
inline JointPolicy step_exact_pg(const MarkovGame& game, const JointPolicy& policy, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("step_exact_pg: eta must be nonnegative");
  return step_exact_pg(policy, averaged_values(game, policy).averaged, eta);
}

/// Runs T iterates starting from `init`, recording gaps on the cadence.
inline LearnTrace run_exact_pg(const MarkovGame& game, const JointPolicy& init, const ExactPGConfig& config) {
  if (!(config.eta > 0.0)) throw std::invalid_argument("run_exact_pg: eta must be > 0");
  if (config.iterations < 1) throw std::invalid_argument("run_exact_pg: T must be >= 1");
  init.check_compatible(game);
  const int cadence = config.cadence > 0 ? config.cadence : default_cadence(game);

  LearnTrace trace;
  JointPolicy policy = init;
  for (int t = 1; t <= config.iterations; ++t) {
    if (is_evaluation_step(t, config.iterations, cadence)) {
      trace.records.push_back({t, policy, nash_gap(game, policy)});
    }
    if (t < config.iterations) policy = step_exact_pg(game, policy, config.eta);
  }
  trace.final_policy = std::move(policy);
  return trace;
}

inline LearnTrace run_exact_pg(const MarkovGame& game, const ExactPGConfig& config) {
  return run_exact_pg(game, JointPolicy::uniform(game), config);
}

enum class StepsizeRule {
  kPotentialFast,   // (1-gamma)^{5/2} sqrt(Phi_max) / (N A sqrt(T))
  kPotentialTight,  // (1-gamma)^4 / (8 kappa^3 N A)
  kCooperative,     // (1-gamma) / (2 N A)
};

inline StepsizeRule parse_stepsize_rule(std::string_view name) {
  if (name == "thm1_fast") return StepsizeRule::kPotentialFast;
  if (name == "thm1_tight") return StepsizeRule::kPotentialTight;
  if (name == "thm2_coop") return StepsizeRule::kCooperative;
  throw std::invalid_argument(fmt::format("unknown stepsize rule '{}'", name));
}

/// Upper bound on the potential, N / (1 - gamma), for rewards in [0, 1].
inline double potential_bound(int num_players, double gamma) { return num_players / (1.0 - gamma); }

/// Theory-driven stepsize. Phi_max is replaced by its N / (1 - gamma) bound, so
/// the result is conservative.
inline double suggest_stepsize(int num_players, int num_actions, double gamma, StepsizeRule rule,
                               double kappa = 1.0, int iterations = 1) {
  const double n = num_players;
  const double a = num_actions;
  switch (rule) {
    case StepsizeRule::kPotentialFast: {
      if (iterations < 1) throw std::invalid_argument("suggest_stepsize: T must be >= 1");
      const double phi_max = potential_bound(num_players, gamma);
      return std::pow(1.0 - gamma, 2.5) * std::sqrt(phi_max) / (n * a * std::sqrt(static_cast<double>(iterations)));
    }
    case StepsizeRule::kPotentialTight:
      if (kappa < 1.0) throw std::invalid_argument("suggest_stepsize: kappa must be >= 1");
      return std::pow(1.0 - gamma, 4) / (8.0 * kappa * kappa * kappa * n * a);
    case StepsizeRule::kCooperative:
      return (1.0 - gamma) / (2.0 * n * a);
  }
  throw std::invalid_argument("suggest_stepsize: invalid rule");
}

inline double suggest_stepsize(const MarkovGame& game, StepsizeRule rule, double kappa = 1.0, int iterations = 1) {
  return suggest_stepsize(game.num_players(), game.num_actions(), game.discount(), rule, kappa, iterations);
}

}  // namespace ipg
