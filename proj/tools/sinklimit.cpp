// sinklimit: sink equilibria, limit hitting probabilities and replicator
// simulations for normal-form games.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure. Diagnostics are a
// single stderr line starting with "sinklimit: error[input]:" or
// "sinklimit: error[numerical]:".

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sinklimit/cli.hpp"
#include "sinklimit/dot.hpp"
#include "sinklimit/sinklimit.hpp"

namespace {

using namespace sinklimit;

struct RunConfig {
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  double tie_tolerance = 0.0;
  std::optional<double> oracle_eps;
  std::string prior = "uniform";
  std::string hitting_path;
  bool with_hitting = false;
  EstimateOptions estimate;
  // random-game
  std::size_t players = 2;
  std::vector<std::size_t> strategies{2};
  std::string mode = "continuous";
  std::uint32_t int_max = 2;
};

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output);
  if (!out) throw InputError("cannot write '" + cfg.output + "'");
  out << text;
}

void emit_json(const RunConfig& cfg, const cli::ojson& j) { emit(cfg, j.dump(2) + "\n"); }

LimitOptions limit_options(const RunConfig& cfg) {
  LimitOptions o;
  o.tie_tolerance = cfg.tie_tolerance;
  return o;
}

HittingMatrix compute_hitting(const Game& game, const RunConfig& cfg) {
  if (cfg.oracle_eps) return oracle_hitting_matrix(game, *cfg.oracle_eps, limit_options(cfg));
  return limit_hitting_probabilities(game, limit_options(cfg));
}

void run_limit(const RunConfig& cfg, bool force_simulation) {
  const auto game = load_game(cfg.input);
  const auto prior = cli::parse_prior(cfg.prior);
  if (prior.kind == cli::ParsedPrior::Kind::kPure) {
    if (force_simulation) throw InputError("simulate needs a mixed prior (uniform or dirichlet:<alpha>)");
    const auto weights = cli::pure_weights_from_json(game, read_json_file(prior.weights_path));
    const auto hm = limit_hitting_probabilities(game, limit_options(cfg));
    emit_json(cfg, cli::limit_json(game, exact_limit_distribution(hm, weights), "exact"));
    return;
  }
  if (!cfg.seed) throw InputError("option '--seed' is required for simulation");
  auto opts = cfg.estimate;
  opts.seed = *cfg.seed;
  opts.params.rng_seed = *cfg.seed;
  const auto sinks = sink_equilibria(game, cfg.tie_tolerance);
  emit_json(cfg, cli::limit_json(game, estimate_limit_distribution(game, prior.spec, opts, sinks), "simulation"));
}

void add_simulation_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--eta", cfg.estimate.params.eta, "replicator step length")->capture_default_str();
  cmd->add_option("--delta", cfg.estimate.params.delta, "noise standard deviation")->capture_default_str();
  cmd->add_option("--tv-tol", cfg.estimate.tv_tol, "TV distance stopping tolerance")->capture_default_str();
  cmd->add_option("--max-steps", cfg.estimate.params.max_steps, "step budget per run")->capture_default_str();
  cmd->add_option("--runs-per-sample", cfg.estimate.runs_per_sample, "replicator runs per prior sample")
      ->capture_default_str();
  cmd->add_option("--max-samples", cfg.estimate.max_samples, "prior sample budget")->capture_default_str();
  cmd->add_option("--window", cfg.estimate.params.window, "classification window (steps)")->capture_default_str();
}

int fail(const char* kind, const std::string& what, int code) {
  std::cerr << "sinklimit: error[" << kind << "]: " << what << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sink equilibria and limit distributions of normal-form games"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* cmd, bool needs_game) {
    if (needs_game) cmd->add_option("game", cfg.input, "game JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--output", cfg.output, "output file (default: stdout)");
    cmd->add_option("--tie-tolerance", cfg.tie_tolerance, "utility gap treated as a tie")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "root random seed");
  };

  auto* sinks_cmd = app.add_subcommand("sinks", "list the sink equilibria");
  common(sinks_cmd, true);

  auto* hit_cmd = app.add_subcommand("hit", "limit hitting probabilities from every pure profile");
  common(hit_cmd, true);
  hit_cmd->add_option("--oracle-eps", cfg.oracle_eps, "solve at this concrete eps instead of the limit");

  auto* limit_cmd = app.add_subcommand("limit", "limit distribution for a prior");
  common(limit_cmd, true);
  limit_cmd->add_option("--prior", cfg.prior, "pure:<weights.json> | uniform | dirichlet:<alpha>")
      ->capture_default_str();
  add_simulation_flags(limit_cmd, cfg);

  auto* sim_cmd = app.add_subcommand("simulate", "limit distribution by replicator simulation");
  common(sim_cmd, true);
  sim_cmd->add_option("--prior", cfg.prior, "uniform | dirichlet:<alpha>")->capture_default_str();
  add_simulation_flags(sim_cmd, cfg);

  auto* dot_cmd = app.add_subcommand("export-dot", "better-response graph as Graphviz DOT");
  common(dot_cmd, true);
  dot_cmd->add_option("--hitting", cfg.hitting_path, "hitting matrix JSON from 'hit'")->check(CLI::ExistingFile);
  dot_cmd->add_flag("--with-hitting", cfg.with_hitting, "compute hitting probabilities for the pies");

  auto* rand_cmd = app.add_subcommand("random-game", "write a random game");
  common(rand_cmd, false);
  rand_cmd->add_option("-p,--players", cfg.players, "number of players")->capture_default_str();
  rand_cmd->add_option("-s,--strategies", cfg.strategies, "strategies per player (one value or one per player)")
      ->capture_default_str();
  rand_cmd->add_option("--mode", cfg.mode, "continuous | integer")
      ->check(CLI::IsMember({"continuous", "integer"}))
      ->capture_default_str();
  rand_cmd->add_option("--int-max", cfg.int_max, "integer mode draws from {0..int-max}")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("input", e.what(), 2);
  }

  try {
    if (*sinks_cmd) {
      const auto game = load_game(cfg.input);
      emit_json(cfg, cli::sinks_json(game, sink_equilibria(game, cfg.tie_tolerance)));
    } else if (*hit_cmd) {
      const auto game = load_game(cfg.input);
      emit_json(cfg, cli::hitting_json(game, compute_hitting(game, cfg), cfg.oracle_eps ? "oracle" : "limit"));
    } else if (*limit_cmd) {
      run_limit(cfg, false);
    } else if (*sim_cmd) {
      run_limit(cfg, true);
    } else if (*dot_cmd) {
      const auto game = load_game(cfg.input);
      std::optional<HittingMatrix> hm;
      if (!cfg.hitting_path.empty())
        hm = cli::hitting_from_json(game, read_json_file(cfg.hitting_path), cfg.tie_tolerance);
      else if (cfg.with_hitting)
        hm = limit_hitting_probabilities(game, limit_options(cfg));
      emit(cfg, export_dot(game, hm ? &*hm : nullptr, cfg.tie_tolerance));
    } else if (*rand_cmd) {
      if (!cfg.seed) throw InputError("option '--seed' is required for random-game");
      std::vector<std::size_t> counts = cfg.strategies;
      if (counts.size() == 1) counts.assign(cfg.players, counts.front());
      if (counts.size() != cfg.players)
        throw InputError("option '--strategies': give one value or one per player");
      const auto dist = cfg.mode == "integer" ? UtilityDistribution::integer(cfg.int_max)
                                              : UtilityDistribution::continuous();
      emit_json(cfg, game_to_json(random_game(*cfg.seed, counts, dist)));
    }
  } catch (const InputError& e) {
    return fail("input", e.what(), 2);
  } catch (const nlohmann::json::exception& e) {
    return fail("input", e.what(), 2);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 3);
  } catch (const InvariantError& e) {
    return fail("numerical", std::string("internal invariant: ") + e.what(), 3);
  }
  return 0;
}
