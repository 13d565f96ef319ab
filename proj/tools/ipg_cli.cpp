// ipg: run learners on Markov games, evaluate policies, and run the self-checks.
//
//   ipg run --config exp.json [--seed 1,2,3] [--out dir] [--cadence 10]
//   ipg eval --game game.json --policy policy.json
//   ipg selftest
//
// Exit codes: 0 ok, 1 selftest failure or internal error, 2 config/parse error,
// 3 invariant violation in a loaded game. IPG_LOG_LEVEL sets verbosity
// (trace, debug, info, warn, error, off; default info).

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ipg/experiment.hpp"
#include "ipg/io.hpp"
#include "ipg/selftest.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ipg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("IPG_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seeds, const std::string& out,
            int cadence) {
  try {
    auto cfg = ipg::experiment::load_config(config_path);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!out.empty()) cfg.output = out;
    if (cadence >= 0) cfg.cadence = cadence;
    spdlog::info("running {} seed(s), output in {}", cfg.seeds.size(), cfg.output);
    ipg::experiment::run(cfg, [](const std::string& msg) { spdlog::info("{}", msg); });
    return 0;
  } catch (const ipg::experiment::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const ipg::InvariantError& e) {
    spdlog::error("invalid game: {}", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

int cmd_eval(const std::string& game_path, const std::string& policy_path) {
  std::optional<ipg::MarkovGame> game;
  try {
    game.emplace(ipg::io::load_game(game_path));
  } catch (const ipg::io::FormatError& e) {
    spdlog::error("game file: {}", e.what());
    return 2;
  } catch (const ipg::InvariantError& e) {
    spdlog::error("invalid game: {}", e.what());
    return 3;
  }
  try {
    const auto policy = ipg::io::load_policy(policy_path);
    policy.check_compatible(*game);
    ipg::experiment::print_gap_report(*game, policy, std::cout);
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("policy file: {}", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"independent policy gradient experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out;
  int cadence = -1;
  auto* run = app.add_subcommand("run", "run a learner from a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed", seeds, "comma-separated seeds overriding the config")->delimiter(',');
  run->add_option("--out", out, "output directory overriding the config");
  run->add_option("--cadence", cadence, "gap evaluation cadence (0 = default)")->check(CLI::NonNegativeNumber);

  std::string game_path;
  std::string policy_path;
  auto* eval = app.add_subcommand("eval", "print best-response gaps of a policy");
  eval->add_option("--game", game_path, "game file (JSON)")->required();
  eval->add_option("--policy", policy_path, "policy file (JSON)")->required();

  auto* selftest = app.add_subcommand("selftest", "run the fast invariant suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(config_path, seeds, out, cadence);
  if (eval->parsed()) return cmd_eval(game_path, policy_path);
  if (selftest->parsed()) return ipg::selftest::run(std::cout);
  return 2;
}
