#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rispricing {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

double distance(Point2 a, Point2 b);

enum class LogBase { natural, base2 };

/// Raised when a config document does not match the schema. `field()` names
/// the offending key (dotted path for nested keys).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Raised when a scenario violates one of its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Returns [top, left, bottom, right, center] of the RIS diamond: horizontal
/// diagonal 25 m, vertical diagonal 50 m, indices assigned counterclockwise
/// from the top with the last RIS at the intersection.
std::array<Point2, 5> place_diamond(Point2 center);

inline constexpr double kDiamondHorizontalDiagonal = 25.0;
inline constexpr double kDiamondVerticalDiagonal = 50.0;

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Static problem instance.
///
/// Power quantities are held in the configured unit (dBm); the linear values
/// the solvers use come from power_budget_w() / noise_power_w().
struct Scenario {
  static constexpr int kSchemaVersion = 1;

  int num_antennas = 4;
  int num_users = 4;
  std::vector<int> elements_per_ris = {20, 20, 20, 20, 20};

  double power_budget_dbm = 10.0;
  double noise_power_dbm = -80.0;
  double cost_weight = 1.0;

  double pathloss_ref_db = 30.0;
  double exponent_direct = 3.5;
  double exponent_ris = 2.0;

  Point2 bs_position{0.0, 0.0};
  std::vector<Point2> ris_positions = default_ris_positions();
  Point2 user_cluster_center{200.0, 0.0};
  double user_cluster_radius = 10.0;

  std::uint64_t rng_seed = 0;

  double inner_tolerance = 1e-4;  // relative surrogate change (P1 loop)
  double outer_tolerance = 1e-3;  // price change, as a fraction of price_cap
  int max_inner_iters = 200;
  int max_outer_iters = 50;

  double price_cap = 0.1;
  LogBase log_base = LogBase::natural;

  // Solver knobs.
  int exhaustive_cap = 5;
  int price_grid_points = 64;
  int golden_iterations = 40;
  int follower_restarts = 0;

  int num_ris() const { return static_cast<int>(elements_per_ris.size()); }
  int total_elements() const;
  /// Index of the first element of RIS s in the stacked element order.
  int element_offset(int s) const;

  double power_budget_w() const { return dbm_to_watts(power_budget_dbm); }
  double noise_power_w() const { return dbm_to_watts(noise_power_dbm); }

  static std::vector<Point2> default_ris_positions();

  bool operator==(const Scenario&) const = default;
};

/// Throws ValidationError naming the first violated invariant.
void validate(const Scenario& scenario);

/// Parses a JSON config document. Omitted fields take the Scenario defaults.
/// `ris.diamond_center` may be given instead of `ris.positions` when S = 5.
Scenario load_scenario(std::string_view config_text);

/// Inverse of load_scenario: load_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& scenario);

/// Applies a `key=value` override using the config document's dotted key
/// names (e.g. `power_budget_dbm=20`, `solver.price_cap=0.2`,
/// `ris.diamond_center_x=120`). The patched document is re-validated.
void apply_override(Scenario& scenario, std::string_view assignment);

/// Resolved node positions for one realization.
struct Geometry {
  Point2 bs;
  std::vector<Point2> ris;
  std::vector<Point2> users;
};

class Rng;

/// K user positions, area-uniform over the configured disk.
std::vector<Point2> sample_users(const Scenario& scenario, Rng& rng);

/// Geometry with users drawn from the scenario's seeded user stream.
Geometry build_geometry(const Scenario& scenario);

}  // namespace rispricing
