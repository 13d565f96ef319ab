#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ipg/envs.hpp"
#include "ipg/evaluation.hpp"
#include "ipg/exact_pg.hpp"
#include "ipg/game.hpp"
#include "ipg/io.hpp"
#include "ipg/optimistic.hpp"
#include "ipg/sample_pg.hpp"
#include "ipg/trace.hpp"

namespace ipg::experiment {

/// Bad or inconsistent experiment configuration; `what()` names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Learner { kExactPG, kSamplePG, kOptimistic };

struct GameSource {
  std::optional<std::string> file;
  std::string builder;  // congestion | cooperative_random | matrix
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  GameSource game;
  Learner learner = Learner::kExactPG;
  std::optional<double> eta;  // unset means "auto"
  int iterations = 1;
  int batch = 1;
  std::optional<double> xi;
  std::optional<double> weight_bound;
  int inner_steps = 0;
  CriticSchedule schedule;
  GameMode mode = GameMode::kCooperative;
  bool random_init = false;
  bool dump_samples = false;
  std::vector<std::uint64_t> seeds{0};
  int cadence = 0;
  std::string output = "out";
};

namespace detail {

template <class T>
T get(const nlohmann::json& obj, const std::string& path, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("field '{}{}' is missing or has the wrong type", path, key));
  }
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& path, const char* key, T fallback) {
  return obj.contains(key) ? get<T>(obj, path, key) : fallback;
}

}  // namespace detail

/// Parses the JSON experiment description.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;

  if (!doc.contains("game") || !doc["game"].is_object()) throw ConfigError("field 'game' is missing or not an object");
  const auto& game = doc["game"];
  const bool has_file = game.contains("file");
  const bool has_builder = game.contains("builder");
  if (has_file == has_builder) throw ConfigError("field 'game' needs exactly one of 'file' or 'builder'");
  if (has_file) {
    cfg.game.file = detail::get<std::string>(game, "game.", "file");
  } else {
    cfg.game.builder = detail::get<std::string>(game, "game.", "builder");
    if (cfg.game.builder != "congestion" && cfg.game.builder != "cooperative_random" && cfg.game.builder != "matrix") {
      throw ConfigError(fmt::format("field 'game.builder': unknown builder '{}'", cfg.game.builder));
    }
    if (game.contains("params")) {
      if (!game["params"].is_object()) throw ConfigError("field 'game.params' must be an object");
      cfg.game.params = game["params"];
    }
  }

  const auto learner = detail::get<std::string>(doc, "", "learner");
  if (learner == "exact_pg") cfg.learner = Learner::kExactPG;
  else if (learner == "sample_pg") cfg.learner = Learner::kSamplePG;
  else if (learner == "optimistic") cfg.learner = Learner::kOptimistic;
  else throw ConfigError(fmt::format("field 'learner': unknown learner '{}'", learner));

  const nlohmann::json params = doc.contains("params") ? doc["params"] : nlohmann::json::object();
  if (!params.is_object()) throw ConfigError("field 'params' must be an object");
  const std::string p = "params.";
  if (params.contains("eta")) {
    const auto& eta = params["eta"];
    if (eta.is_string()) {
      if (eta.get<std::string>() != "auto") throw ConfigError("field 'params.eta' must be a number or \"auto\"");
    } else if (eta.is_number()) {
      cfg.eta = eta.get<double>();
      if (!(*cfg.eta > 0.0)) throw ConfigError("field 'params.eta': eta must be > 0");
    } else {
      throw ConfigError("field 'params.eta' must be a number or \"auto\"");
    }
  }
  cfg.iterations = detail::get_or<int>(params, p, "T", 1);
  if (cfg.iterations < 1) throw ConfigError("field 'params.T': T must be ≥ 1");
  cfg.batch = detail::get_or<int>(params, p, "K", 1);
  if (cfg.batch < 1) throw ConfigError("field 'params.K': K must be ≥ 1");
  if (params.contains("xi")) {
    cfg.xi = detail::get<double>(params, p, "xi");
    if (!(*cfg.xi > 0.0 && *cfg.xi <= 1.0)) throw ConfigError("field 'params.xi': xi must lie in (0, 1]");
  }
  if (params.contains("W")) cfg.weight_bound = detail::get<double>(params, p, "W");
  cfg.inner_steps = detail::get_or<int>(params, p, "K_inner", 0);
  if (params.contains("alpha")) {
    const auto& alpha = params["alpha"];
    if (!alpha.is_object()) throw ConfigError("field 'params.alpha' must be an object");
    const auto kind = detail::get<std::string>(alpha, "params.alpha.", "schedule");
    if (kind == "constant") {
      cfg.schedule = CriticSchedule::constant(detail::get<double>(alpha, "params.alpha.", "value"));
    } else if (kind == "decaying") {
      cfg.schedule = CriticSchedule::decaying(detail::get_or<double>(alpha, "params.alpha.", "horizon", 0.0));
    } else {
      throw ConfigError(fmt::format("field 'params.alpha.schedule': unknown schedule '{}'", kind));
    }
    try {
      cfg.schedule.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("field 'params.alpha': {}", e.what()));
    }
  }
  const auto mode = detail::get_or<std::string>(params, p, "mode", "cooperative");
  if (mode == "cooperative") cfg.mode = GameMode::kCooperative;
  else if (mode == "zero_sum") cfg.mode = GameMode::kZeroSum;
  else throw ConfigError(fmt::format("field 'params.mode': unknown mode '{}'", mode));
  const auto init = detail::get_or<std::string>(params, p, "init", "uniform");
  if (init != "uniform" && init != "random") throw ConfigError("field 'params.init' must be \"uniform\" or \"random\"");
  cfg.random_init = init == "random";
  cfg.dump_samples = detail::get_or<bool>(params, p, "dump_samples", false);

  if (doc.contains("seeds")) cfg.seeds = detail::get<std::vector<std::uint64_t>>(doc, "", "seeds");
  if (cfg.seeds.empty()) throw ConfigError("field 'seeds' must be nonempty");
  cfg.cadence = detail::get_or<int>(doc, "", "cadence", 0);
  if (cfg.cadence < 0) throw ConfigError("field 'cadence' must be >= 0");
  cfg.output = detail::get_or<std::string>(doc, "", "output", "out");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: parse error at byte {}: {}", path, e.byte, e.what()));
  }
  return parse_config(doc);
}

namespace detail {

inline Eigen::VectorXd vector_param(const nlohmann::json& params, const char* key, Eigen::VectorXd fallback) {
  if (!params.contains(key)) return fallback;
  const auto values = get<std::vector<double>>(params, "game.params.", key);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace detail

/// Builds or loads the configured game. Builder argument problems raise
/// ConfigError; a loaded file that violates game invariants raises InvariantError.
inline MarkovGame make_game(const GameSource& source) {
  if (source.file) {
    try {
      return io::load_game(*source.file);
    } catch (const io::FormatError& e) {
      throw ConfigError(fmt::format("game file: {}", e.what()));
    }
  }
  const auto& params = source.params;
  const std::string path = "game.params.";
  try {
    if (source.builder == "congestion") {
      envs::CongestionSpec spec;
      spec.num_players = detail::get_or<int>(params, path, "num_players", spec.num_players);
      spec.safe_weights = detail::get_or<std::vector<double>>(params, path, "safe_weights", spec.safe_weights);
      spec.distancing_weights =
          detail::get_or<std::vector<double>>(params, path, "distancing_weights", spec.distancing_weights);
      if (params.contains("penalty")) spec.penalty = detail::get<double>(params, path, "penalty");
      spec.discount = detail::get_or<double>(params, path, "gamma", spec.discount);
      spec.initial_dist = detail::vector_param(params, "rho", spec.initial_dist);
      return envs::build_congestion(spec);
    }
    if (source.builder == "cooperative_random") {
      Rng rng(detail::get_or<std::uint64_t>(params, path, "seed", 0));
      return envs::build_cooperative_random(detail::get_or<int>(params, path, "states", 2),
                                            detail::get_or<int>(params, path, "players", 2),
                                            detail::get_or<int>(params, path, "actions", 2),
                                            detail::get_or<double>(params, path, "gamma", 0.9), rng);
    }
    const auto rows = detail::get<std::vector<std::vector<double>>>(params, path, "payoff");
    Eigen::MatrixXd payoff(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != payoff.cols()) throw ConfigError("field 'game.params.payoff' is ragged");
      for (std::size_t c = 0; c < rows[r].size(); ++c) payoff(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    const auto mode = detail::get_or<std::string>(params, path, "mode", "cooperative");
    if (mode != "cooperative" && mode != "zero_sum") throw ConfigError("field 'game.params.mode' is invalid");
    return envs::build_matrix_game(
        payoff, mode == "cooperative" ? envs::MatrixGameMode::kCooperative : envs::MatrixGameMode::kZeroSum,
        detail::get_or<double>(params, path, "gamma", 0.9));
  } catch (const InvariantError& e) {
    throw ConfigError(fmt::format("game builder '{}': {}", source.builder, e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("game builder '{}': {}", source.builder, e.what()));
  }
}

/// Stepsize used when eta is "auto": the cooperative rule for identical-reward
/// games, otherwise the tight potential-game rule with the estimated kappa
/// (kappa = 1 when it cannot be enumerated). The optimistic learner uses the
/// stepsize paired with its critic schedule.
inline double auto_stepsize(const MarkovGame& game, const ExperimentConfig& cfg) {
  if (cfg.learner == Learner::kOptimistic) {
    if (cfg.schedule.kind == CriticSchedule::Kind::kConstant) {
      return optimistic_constant_rate_eta(game.discount(), game.num_states(), game.num_actions(), cfg.schedule.alpha);
    }
    return std::pow(1.0 - game.discount(), 2.5) / (1e4 * std::sqrt(static_cast<double>(game.num_states()) * game.num_actions()));
  }
  if (game.identical_rewards()) return suggest_stepsize(game, StepsizeRule::kCooperative);
  double kappa = 1.0;
  try {
    kappa = estimate_kappa(game, game.initial_distribution());
  } catch (const std::exception&) {
  }
  return suggest_stepsize(game, StepsizeRule::kPotentialTight, kappa);
}

/// Interior random policy with Dirichlet(1) rows.
inline JointPolicy random_policy(const MarkovGame& game, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x1417));
  std::exponential_distribution<double> exponential(1.0);
  std::vector<PlayerPolicy> players;
  for (int i = 0; i < game.num_players(); ++i) {
    PlayerPolicy pi(game.num_states(), game.num_actions());
    for (int s = 0; s < game.num_states(); ++s) {
      for (int a = 0; a < game.num_actions(); ++a) pi(s, a) = exponential(rng);
      pi.row(s) /= pi.row(s).sum();
    }
    players.push_back(std::move(pi));
  }
  return JointPolicy(std::move(players));
}

/// Result of one seed.
struct SeedResult {
  std::uint64_t seed = 0;
  LearnTrace trace;
  double nash_regret = 0.0;
  int t_star = 0;
  double min_max_gap = 0.0;
  double wall_seconds = 0.0;
};

/// Runs the configured learner for one seed; `sample_sink` receives raw sample rows when set.
inline SeedResult run_seed(const MarkovGame& game, const ExperimentConfig& cfg, double eta, std::uint64_t seed,
                           std::ostream* sample_sink = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  SeedResult result;
  result.seed = seed;
  switch (cfg.learner) {
    case Learner::kExactPG: {
      const JointPolicy init = cfg.random_init ? random_policy(game, seed) : JointPolicy::uniform(game);
      result.trace = run_exact_pg(game, init, ExactPGConfig{eta, cfg.iterations, cfg.cadence});
      break;
    }
    case Learner::kSamplePG: {
      SamplePGConfig sc;
      sc.iterations = cfg.iterations;
      sc.batch = cfg.batch;
      sc.eta = eta;
      sc.xi = cfg.xi;
      sc.weight_bound = cfg.weight_bound;
      sc.inner_steps = cfg.inner_steps;
      sc.seed = seed;
      sc.cadence = cfg.cadence;
      if (sample_sink) {
        io::write_sample_header(*sample_sink);
        sc.on_batch = [&, k = static_cast<long long>(cfg.batch)](int t, const SampleBatch& batch) {
          io::write_samples(batch, (t - 1) * k, *sample_sink);
        };
      }
      result.trace = run_sample_pg(game, sc);
      break;
    }
    case Learner::kOptimistic: {
      result.trace = run_optimistic(game, OptimisticConfig{eta, cfg.schedule, cfg.mode, cfg.iterations, cfg.cadence});
      break;
    }
  }
  result.nash_regret = nash_regret(result.trace);
  const auto best = best_iterate(result.trace);
  result.t_star = result.trace.records[best].iteration;
  result.min_max_gap = result.trace.records[best].gaps.max_gap;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

using Logger = std::function<void(const std::string&)>;

/// Runs every seed (in parallel, up to the hardware concurrency) and writes
/// trace_seed<k>.csv, final_policy_seed<k>.json and summary.csv under cfg.output.
inline std::vector<SeedResult> run(const ExperimentConfig& cfg, const Logger& log = {}) {
  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(msg);
  };

  const MarkovGame game = make_game(cfg.game);
  double eta = 0.0;
  if (cfg.eta) {
    eta = *cfg.eta;
  } else {
    eta = auto_stepsize(game, cfg);
    say(fmt::format("stepsize auto -> eta = {:.6g}", eta));
  }
  if (cfg.learner == Learner::kOptimistic) {
    if (auto warning = optimistic_eta_warning(game, eta)) say("warning: " + *warning);
  }

  std::filesystem::create_directories(cfg.output);
  const std::filesystem::path out_dir(cfg.output);

  auto task = [&](std::uint64_t seed) {
    std::optional<std::ofstream> samples;
    if (cfg.dump_samples && cfg.learner == Learner::kSamplePG) {
      samples.emplace(out_dir / fmt::format("samples_seed{}.csv", seed));
    }
    SeedResult result = run_seed(game, cfg, eta, seed, samples ? &*samples : nullptr);
    std::ofstream trace_file(out_dir / fmt::format("trace_seed{}.csv", seed));
    io::write_trace_csv(result.trace, trace_file);
    std::ofstream policy_file(out_dir / fmt::format("final_policy_seed{}.json", seed));
    policy_file << io::policy_to_json(result.trace.final_policy).dump(1) << '\n';
    say(fmt::format("seed {}: nash_regret = {:.6g}, t* = {}, min max_gap = {:.6g}", seed, result.nash_regret,
                    result.t_star, result.min_max_gap));
    return result;
  };

  std::vector<SeedResult> results(cfg.seeds.size());
  const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t first = 0; first < cfg.seeds.size(); first += workers) {
    std::vector<std::future<SeedResult>> pending;
    const std::size_t last = std::min(cfg.seeds.size(), first + workers);
    for (std::size_t k = first; k < last; ++k) pending.push_back(std::async(std::launch::async, task, cfg.seeds[k]));
    for (std::size_t k = first; k < last; ++k) results[k] = pending[k - first].get();
  }

  std::ofstream summary(out_dir / "summary.csv");
  summary << "seed,nash_regret,t_star,min_max_gap,wall_time_s\n";
  for (const auto& r : results) {
    summary << r.seed << ',' << fmt::format("{:.17g}", r.nash_regret) << ',' << r.t_star << ','
            << fmt::format("{:.17g}", r.min_max_gap) << ',' << fmt::format("{:.3f}", r.wall_seconds) << '\n';
  }
  return results;
}

/// Fixed-column report of a policy's values and best-response gaps at rho.
inline void print_gap_report(const MarkovGame& game, const JointPolicy& policy, std::ostream& out) {
  policy.check_compatible(game);
  const auto report = nash_gap(game, policy);
  out << fmt::format("{:<8}{:>22}{:>22}{:>22}\n", "player", "value_at_rho", "best_response", "gap");
  for (int i = 0; i < game.num_players(); ++i) {
    out << fmt::format("{:<8}{:>22.12f}{:>22.12f}{:>22.12f}\n", i, report.values[i],
                       report.values[i] + report.per_player_gap[i], report.per_player_gap[i]);
  }
  out << fmt::format("{:<8}{:>66.12f}\n", "max_gap", report.max_gap);
}

}  // namespace ipg::experiment
