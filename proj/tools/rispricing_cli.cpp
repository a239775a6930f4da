// rispricing: command-line driver.
//
//   rispricing run    --sweep power|location --out DIR [--config F] [--set k=v]...
//   rispricing solve  [--config F] [--scheme S] [--seed N] [--out report.json]
//   rispricing oracle [--seeds 0..24] --out fixture.json
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid config or arguments,
// 3 non-convergence under --strict.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rispricing/channel.hpp"
#include "rispricing/follower.hpp"
#include "rispricing/harness.hpp"
#include "rispricing/leader.hpp"
#include "rispricing/oracle.hpp"
#include "rispricing/scenario.hpp"
#include "rispricing/serialization.hpp"

namespace fs = std::filesystem;
using namespace rispricing;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNotConverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Scenario load_base(const std::string& config, const std::vector<std::string>& overrides) {
  Scenario sc = config.empty() ? Scenario{} : load_scenario(read_file(config));
  for (const auto& o : overrides) apply_override(sc, o);
  validate(sc);
  return sc;
}

/// "0..9" (inclusive) or "1,4,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, dots));
      const auto hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw UsageError("empty seed range '" + text + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) seeds.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw UsageError("bad seed list '" + text + "'");
  }
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

SchemeKind scheme_from_cli(const std::string& name) {
  if (name == "uniform") return SchemeKind::stackelberg_uniform;
  if (name == "nonuniform" || name == "non-uniform") return SchemeKind::stackelberg_nonuniform;
  return parse_scheme_kind(name);
}

struct RunOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string sweep;
  std::vector<std::string> schemes;
  std::string seeds = "0..9";
  std::vector<double> values;
  std::string out;
  bool strict = false;
  bool audit = false;
  int workers = 0;
};

int run_command(const RunOptions& o) {
  const Scenario base = load_base(o.config, o.overrides);
  SweepSpec spec;
  spec.variable = parse_sweep_variable(o.sweep);
  spec.values = o.values;
  if (spec.values.empty()) {
    spec.values = spec.variable == SweepVariable::power_budget_dbm ? default_power_values()
                                                                   : default_location_values();
  }
  if (o.schemes.empty()) {
    spec.schemes = {SchemeKind::stackelberg_uniform, SchemeKind::stackelberg_nonuniform,
                    SchemeKind::random_uniform, SchemeKind::random_nonuniform};
  }
  for (const auto& s : o.schemes) spec.schemes.push_back(scheme_from_cli(s));
  spec.seeds = parse_seeds(o.seeds);
  spec.workers = o.workers;
  spec.audit = o.audit;

  const SweepTable table = run_sweep(spec, base);

  fs::create_directories(o.out);
  const std::string stem = "sweep_" + to_string(spec.variable);
  emit_csv(table, fs::path(o.out) / (stem + ".csv"));
  write_file(fs::path(o.out) / (stem + "_stderr.csv"), stderr_csv(table));
  write_file(fs::path(o.out) / ("plot_" + to_string(spec.variable) + ".py"),
             plot_script(table, stem + ".csv"));
  write_file(fs::path(o.out) / "scenario.json", serialize_scenario(base));

  std::size_t points = 0, unconverged = 0;
  for (const auto& r : table.rows) {
    if (!r.seed) continue;
    ++points;
    unconverged += r.converged == 1.0 ? 0 : 1;
  }
  std::fprintf(stderr, "%zu points, %zu not converged, wrote %s\n", points, unconverged,
               (fs::path(o.out) / (stem + ".csv")).string().c_str());
  if (o.strict && !table.all_converged) return kExitNotConverged;
  return 0;
}

struct SolveOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string scheme = "nonuniform";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string dump_channels;
  std::string load_channels_from;
  std::string trace;
  std::string summary;
  bool strict = false;
};

int solve_command(const SolveOptions& o) {
  Scenario sc = load_base(o.config, o.overrides);
  if (o.seed_given) sc.rng_seed = o.seed;

  ChannelSet channels = o.load_channels_from.empty()
                            ? generate_channels(sc, build_geometry(sc))
                            : load_channels(read_file(o.load_channels_from));
  if (channels.block_sizes != sc.elements_per_ris || channels.num_antennas() != sc.num_antennas ||
      channels.num_users() != sc.num_users) {
    throw ValidationError("loaded channels do not match the scenario dimensions");
  }
  if (!o.dump_channels.empty()) write_file(o.dump_channels, dump_channels(channels));

  const SchemeKind kind = scheme_from_cli(o.scheme);
  FollowerResponseCache follower(channels, sc);
  const EquilibriumReport report = run_scheme(follower, kind, sc.rng_seed);

  const std::string doc = report_to_json(report);
  if (o.out.empty()) {
    std::cout << doc << '\n';
  } else {
    write_file(o.out, doc);
  }
  if (!o.trace.empty()) write_file(o.trace, trace_to_csv(report.follower));
  if (!o.summary.empty()) {
    SweepTable t;
    t.variable = SweepVariable::power_budget_dbm;
    t.num_ris = sc.num_ris();
    SweepRow row;
    row.value = sc.power_budget_dbm;
    row.scheme = kind;
    row.seed = sc.rng_seed;
    row.u_bs = report.bs_utility;
    row.rounds = report.rounds;
    row.converged = report.converged ? 1.0 : 0.0;
    row.ris_utility = report.ris_utilities;
    row.price = report.prices.q;
    for (bool b : report.follower.phases.purchased) row.purchased.push_back(b ? 1.0 : 0.0);
    t.rows.push_back(row);
    write_file(o.summary, to_csv(t));
  }

  std::fprintf(stderr, "%s: U_bs=%.9g rounds=%d converged=%s se=%s\n", to_string(kind).c_str(),
               report.bs_utility, report.rounds, report.converged ? "yes" : "no",
               report.se.accepted ? "accepted" : "rejected");
  if (o.strict && !report.converged) return kExitNotConverged;
  return 0;
}

struct OracleOptions {
  std::string seeds = "0..24";
  std::string out;
  int restarts = OracleBudget{}.restarts;
  int grid_points = OracleBudget{}.price_grid_points;
};

int oracle_command(const OracleOptions& o) {
  using nlohmann::json;
  json cases = json::array();
  for (std::uint64_t seed : parse_seeds(o.seeds)) {
    const TinyInstance inst = make_tiny_instance(seed);
    OracleBudget budget;
    budget.seed = seed;
    budget.restarts = o.restarts;
    budget.price_grid_points = o.grid_points;

    const OracleFollowerResult follower =
        oracle_follower(inst.channels, inst.prices, inst.scenario, budget);
    FollowerResponseCache cache(inst.channels, inst.scenario);
    const OracleLeaderResult leader =
        oracle_leader_grid(cache, linear_grid(inst.scenario.price_cap, budget.price_grid_points));

    cases.push_back({{"seed", seed},
                     {"num_ris", inst.scenario.num_ris()},
                     {"elements_per_ris", inst.scenario.elements_per_ris},
                     {"prices", inst.prices.q},
                     {"oracle_utility", follower.utility},
                     {"oracle_mask", follower.mask},
                     {"oracle_rate_by_mask", follower.rate_by_mask},
                     {"uniform_price", leader.price},
                     {"uniform_revenue", leader.revenue}});
    std::fprintf(stderr, "seed %llu: utility %.12g mask %llu uniform price %.6g revenue %.6g\n",
                 static_cast<unsigned long long>(seed), follower.utility,
                 static_cast<unsigned long long>(follower.mask), leader.price, leader.revenue);
  }
  const json doc = {{"schema_version", 1},
                    {"kind", "rispricing.oracle_fixture"},
                    {"restarts", o.restarts},
                    {"price_grid_points", o.grid_points},
                    {"cases", cases}};
  write_file(o.out, doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg pricing game for RIS-aided networks"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Parameter sweep over seeds and pricing schemes");
  run_cmd->add_option("--config", run.config, "Scenario config (JSON)")->check(CLI::ExistingFile);
  run_cmd->add_option("--set", run.overrides, "Override a config field, key=value");
  run_cmd->add_option("--sweep", run.sweep, "power | location")->required();
  run_cmd->add_option("--scheme", run.schemes,
                      "stackelberg-uniform | stackelberg-nonuniform | random-uniform | "
                      "random-nonuniform | random (repeatable; default all)");
  run_cmd->add_option("--seeds", run.seeds, "Seed range a..b or list a,b,c")->capture_default_str();
  run_cmd->add_option("--values", run.values, "Swept values (default per sweep)")->delimiter(',');
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_flag("--strict", run.strict, "Exit 3 if any point did not converge");
  run_cmd->add_flag("--audit", run.audit, "Re-evaluate U_bs from each serialized report");
  run_cmd->add_option("--workers", run.workers, "Concurrent sweep points (0 = all cores)");

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Single equilibrium on one realization");
  solve_cmd->add_option("--config", solve.config, "Scenario config (JSON)")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--set", solve.overrides, "Override a config field, key=value");
  solve_cmd->add_option("--scheme", solve.scheme, "uniform | nonuniform | random")
      ->capture_default_str();
  auto* seed_opt = solve_cmd->add_option("--seed", solve.seed, "Channel seed");
  solve_cmd->add_option("--out", solve.out, "Report path (default stdout)");
  solve_cmd->add_option("--dump-channels", solve.dump_channels, "Write the channel realization");
  solve_cmd->add_option("--load-channels", solve.load_channels_from, "Replay a channel dump")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--trace", solve.trace, "Inner-loop trace CSV of the final response");
  solve_cmd->add_option("--summary", solve.summary, "One-row summary CSV");
  solve_cmd->add_flag("--strict", solve.strict, "Exit 3 if the price loop did not converge");

  OracleOptions oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force fixture for tiny instances");
  oracle_cmd->add_option("--seeds", oracle.seeds, "Seed range a..b or list a,b,c")
      ->capture_default_str();
  oracle_cmd->add_option("--out", oracle.out, "Fixture path")->required();
  oracle_cmd->add_option("--restarts", oracle.restarts, "Gradient-ascent starts per set")
      ->capture_default_str();
  oracle_cmd->add_option("--grid", oracle.grid_points, "Uniform price grid size")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run_cmd) return run_command(run);
    if (*solve_cmd) {
      solve.seed_given = seed_opt->count() > 0;
      return solve_command(solve);
    }
    if (*oracle_cmd) return oracle_command(oracle);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
