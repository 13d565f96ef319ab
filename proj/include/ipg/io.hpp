#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ipg/game.hpp"
#include "ipg/sampling.hpp"
#include "ipg/trace.hpp"

// Game file schema (JSON):
//   n_players, n_states, n_actions : integers
//   gamma                          : discount in [0, 1)
//   rho                            : array of n_states probabilities
//   transitions                    : array of [s, joint_a, s_next, p]; absent entries are 0
//   rewards                        : array of [i, s, joint_a, r]; absent entries are 0
// joint_a is the base-A joint action index with player 0 as the least-significant digit.
//
// Policy file schema (JSON):
//   policy : [player][state][action] probabilities
namespace ipg::io {

/// Malformed file or schema violation (as opposed to a game invariant violation).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T field(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key)) throw FormatError(fmt::format("missing field '{}'", key));
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("field '{}': {}", key, e.what()));
  }
}

inline nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(fmt::format("{}: parse error at byte {}: {}", path, e.byte, e.what()));
  }
}

inline long long index_entry(const std::vector<double>& entry, std::size_t pos, const char* list, std::size_t k) {
  const double v = entry[pos];
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw FormatError(fmt::format("{}[{}]: index {} is not an integer", list, k, v));
  }
  return static_cast<long long>(v);
}

}  // namespace detail

/// Builds a game from its JSON form. Schema problems raise FormatError; invariant
/// violations (row sums, reward range, ...) raise InvariantError naming the indices.
inline MarkovGame game_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("game document must be an object");
  const int n = detail::field<int>(doc, "n_players");
  const int states = detail::field<int>(doc, "n_states");
  const int actions = detail::field<int>(doc, "n_actions");
  const double gamma = detail::field<double>(doc, "gamma");
  const auto rho_values = detail::field<std::vector<double>>(doc, "rho");
  if (n < 1 || states < 1 || actions < 1) throw FormatError("n_players, n_states, n_actions must be >= 1");

  const JointActionCodec codec(n, actions);
  const std::size_t joints = codec.size();
  const auto s_count = static_cast<std::size_t>(states);
  std::vector<double> transition(s_count * joints * s_count, 0.0);
  std::vector<double> rewards(static_cast<std::size_t>(n) * s_count * joints, 0.0);
  std::vector<bool> seen_transition(transition.size(), false);
  std::vector<bool> seen_reward(rewards.size(), false);

  const auto entries = detail::field<std::vector<std::vector<double>>>(doc, "transitions");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.size() != 4) throw FormatError(fmt::format("transitions[{}] must have 4 entries", k));
    const auto s = detail::index_entry(e, 0, "transitions", k);
    const auto j = detail::index_entry(e, 1, "transitions", k);
    const auto next = detail::index_entry(e, 2, "transitions", k);
    if (s < 0 || s >= states || j < 0 || static_cast<std::size_t>(j) >= joints || next < 0 || next >= states) {
      throw FormatError(fmt::format("transitions[{}] index out of range (s={}, joint_a={}, s'={})", k, s, j, next));
    }
    const std::size_t idx = (static_cast<std::size_t>(s) * joints + static_cast<std::size_t>(j)) * s_count +
                            static_cast<std::size_t>(next);
    if (seen_transition[idx]) throw FormatError(fmt::format("transitions[{}] duplicates an earlier entry", k));
    seen_transition[idx] = true;
    transition[idx] = e[3];
  }

  const auto reward_entries = detail::field<std::vector<std::vector<double>>>(doc, "rewards");
  for (std::size_t k = 0; k < reward_entries.size(); ++k) {
    const auto& e = reward_entries[k];
    if (e.size() != 4) throw FormatError(fmt::format("rewards[{}] must have 4 entries", k));
    const auto i = detail::index_entry(e, 0, "rewards", k);
    const auto s = detail::index_entry(e, 1, "rewards", k);
    const auto j = detail::index_entry(e, 2, "rewards", k);
    if (i < 0 || i >= n || s < 0 || s >= states || j < 0 || static_cast<std::size_t>(j) >= joints) {
      throw FormatError(fmt::format("rewards[{}] index out of range (i={}, s={}, joint_a={})", k, i, s, j));
    }
    const std::size_t idx = (static_cast<std::size_t>(i) * s_count + static_cast<std::size_t>(s)) * joints +
                            static_cast<std::size_t>(j);
    if (seen_reward[idx]) throw FormatError(fmt::format("rewards[{}] duplicates an earlier entry", k));
    seen_reward[idx] = true;
    rewards[idx] = e[3];
  }

  Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(rho_values.data(), static_cast<Eigen::Index>(rho_values.size()));
  return MarkovGame(n, states, actions, std::move(transition), std::move(rewards), gamma, std::move(rho));
}

inline nlohmann::json game_to_json(const MarkovGame& game) {
  nlohmann::json doc;
  doc["n_players"] = game.num_players();
  doc["n_states"] = game.num_states();
  doc["n_actions"] = game.num_actions();
  doc["gamma"] = game.discount();
  const auto& rho = game.initial_distribution();
  doc["rho"] = std::vector<double>(rho.data(), rho.data() + rho.size());
  auto transitions = nlohmann::json::array();
  auto rewards = nlohmann::json::array();
  for (int s = 0; s < game.num_states(); ++s) {
    for (std::size_t j = 0; j < game.num_joint_actions(); ++j) {
      for (int next = 0; next < game.num_states(); ++next) {
        const double p = game.transition(s, j, next);
        if (p != 0.0) transitions.push_back({s, j, next, p});
      }
    }
  }
  for (int i = 0; i < game.num_players(); ++i) {
    for (int s = 0; s < game.num_states(); ++s) {
      for (std::size_t j = 0; j < game.num_joint_actions(); ++j) {
        const double r = game.reward(i, s, j);
        if (r != 0.0) rewards.push_back({i, s, j, r});
      }
    }
  }
  doc["transitions"] = std::move(transitions);
  doc["rewards"] = std::move(rewards);
  return doc;
}

inline MarkovGame load_game(const std::string& path) { return game_from_json(detail::parse_file(path)); }

inline void save_game(const MarkovGame& game, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path));
  out << game_to_json(game).dump(1) << '\n';
}

inline JointPolicy policy_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("policy document must be an object");
  const auto table = detail::field<std::vector<std::vector<std::vector<double>>>>(doc, "policy");
  if (table.empty()) throw FormatError("policy must list at least one player");
  std::vector<PlayerPolicy> players;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& rows = table[i];
    if (rows.empty() || rows.front().empty()) throw FormatError(fmt::format("policy[{}] is empty", i));
    PlayerPolicy pi(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
      if (rows[s].size() != rows.front().size()) {
        throw FormatError(fmt::format("policy[{}][{}] has {} actions, expected {}", i, s, rows[s].size(), rows.front().size()));
      }
      for (std::size_t a = 0; a < rows[s].size(); ++a) {
        pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = rows[s][a];
      }
    }
    players.push_back(std::move(pi));
  }
  return JointPolicy(std::move(players));
}

inline nlohmann::json policy_to_json(const JointPolicy& policy) {
  nlohmann::json players = nlohmann::json::array();
  for (int i = 0; i < policy.num_players(); ++i) {
    nlohmann::json rows = nlohmann::json::array();
    for (int s = 0; s < policy.num_states(); ++s) {
      std::vector<double> row(policy.num_actions());
      for (int a = 0; a < policy.num_actions(); ++a) row[a] = policy[i](s, a);
      rows.push_back(row);
    }
    players.push_back(std::move(rows));
  }
  return {{"policy", std::move(players)}};
}

inline JointPolicy load_policy(const std::string& path) { return policy_from_json(detail::parse_file(path)); }

inline void save_policy(const JointPolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path));
  out << policy_to_json(policy).dump(1) << '\n';
}

/// Writes one trace as delimited text:
///   t,max_gap,gap_player_0..gap_player_{N-1},mean_policy_l1_distance_to_final
/// Values use 17 significant digits so identical runs produce identical files.
inline void write_trace_csv(const LearnTrace& trace, std::ostream& out) {
  const int n = trace.final_policy.num_players();
  out << "t,max_gap";
  for (int i = 0; i < n; ++i) out << ",gap_player_" << i;
  out << ",mean_policy_l1_distance_to_final\n";
  for (const auto& rec : trace.records) {
    out << rec.iteration << ',' << fmt::format("{:.17g}", rec.gaps.max_gap);
    for (double g : rec.gaps.per_player_gap) out << ',' << fmt::format("{:.17g}", g);
    out << ',' << fmt::format("{:.17g}", mean_policy_l1_distance(rec.policy, trace.final_policy)) << '\n';
  }
}

/// Header of the raw sample dump.
inline void write_sample_header(std::ostream& out) { out << "round,player,state,action,return\n"; }

/// Appends a batch to the raw sample dump; `first_round` is the global index of round 0.
inline void write_samples(const SampleBatch& batch, long long first_round, std::ostream& out) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t k = 0; k < batch[i].size(); ++k) {
      const auto& sample = batch[i][k];
      out << first_round + static_cast<long long>(k) << ',' << i << ',' << sample.state << ',' << sample.action << ','
          << fmt::format("{:.17g}", sample.ret) << '\n';
    }
  }
}

}  // namespace ipg::io
