#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rispricing/follower.hpp"
#include "rispricing/leader.hpp"
#include "rispricing/scenario.hpp"

namespace rispricing {

enum class SweepVariable { power_budget_dbm, diamond_center_x };

enum class SchemeKind {
  stackelberg_uniform,
  stackelberg_nonuniform,
  random_uniform,
  random_nonuniform,
};

std::string to_string(SweepVariable v);
std::string to_string(SchemeKind k);
/// Accepts the names produced by to_string plus "random" (= random-nonuniform).
SchemeKind parse_scheme_kind(std::string_view name);
SweepVariable parse_sweep_variable(std::string_view name);

inline constexpr double kMinPowerDbm = -20.0;
inline constexpr double kMaxPowerDbm = 30.0;
inline constexpr double kMinCenterX = 12.5;
inline constexpr double kMaxCenterX = 200.0;

struct SweepSpec {
  SweepVariable variable = SweepVariable::power_budget_dbm;
  std::vector<double> values;
  std::vector<SchemeKind> schemes;
  std::vector<std::uint64_t> seeds;
  /// Concurrent sweep points; 0 picks std::thread::hardware_concurrency().
  int workers = 0;
  /// Round-trip each report through JSON and re-evaluate the BS utility.
  bool audit = false;
};

/// -10..20 dBm in 5 dB steps.
std::vector<double> default_power_values();
/// `points` evenly spaced diamond-center x positions on [12.5, 200] m.
std::vector<double> default_location_values(int points = 8);

/// Throws ValidationError on empty lists or out-of-range values.
void validate(const SweepSpec& spec);

/// Base scenario with the swept variable set and the seed applied.
Scenario scenario_at(const Scenario& base, SweepVariable variable, double value,
                     std::uint64_t seed);

/// Runs one pricing scheme on a prepared follower cache. Random prices are
/// drawn from the (seed, scheme) price stream.
EquilibriumReport run_scheme(FollowerResponseCache& follower, SchemeKind kind,
                             std::uint64_t seed);

/// One CSV row. `seed` is empty for aggregate rows.
struct SweepRow {
  double value = 0.0;
  SchemeKind scheme = SchemeKind::stackelberg_nonuniform;
  std::optional<std::uint64_t> seed;
  std::string label;  // "mean" / "stderr" for aggregate rows
  double u_bs = 0.0;
  double rounds = 0.0;
  double converged = 0.0;
  std::vector<double> ris_utility;
  std::vector<double> price;
  std::vector<double> purchased;
};

struct SweepTable {
  SweepVariable variable = SweepVariable::power_budget_dbm;
  int num_ris = 0;
  /// Per (value, scheme): one row per seed, then the "mean" row.
  std::vector<SweepRow> rows;
  /// Per (value, scheme): the "stderr" row.
  std::vector<SweepRow> stderr_rows;
  bool all_converged = true;

  /// Mean rows for one scheme, in value order.
  std::vector<SweepRow> means(SchemeKind scheme) const;
};

/// Every (value, scheme, seed) point; deterministic given the spec and base
/// scenario regardless of worker count. Throws ValidationError naming the
/// offending point if any scenario is invalid.
SweepTable run_sweep(const SweepSpec& spec, const Scenario& base);

/// Column names: variable,value,scheme,seed,u_bs,rounds,converged then
/// V_1..V_S, q_1..q_S, psi_1..psi_S (7 + 3S columns).
std::vector<std::string> csv_header(int num_ris);
std::string to_csv(const SweepTable& table);
std::string stderr_csv(const SweepTable& table);

/// Writes to_csv(table) to `path` (overwriting). Throws std::runtime_error
/// naming the path on I/O failure.
void emit_csv(const SweepTable& table, const std::filesystem::path& path);

/// Self-contained matplotlib script plotting the mean curves of `csv_name`.
std::string plot_script(const SweepTable& table, const std::string& csv_name);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// series is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rispricing
