#include "rispricing/scenario.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "rispricing/rng.hpp"

namespace rispricing {

using nlohmann::json;

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

std::array<Point2, 5> place_diamond(Point2 center) {
  const double half_h = kDiamondHorizontalDiagonal / 2.0;
  const double half_v = kDiamondVerticalDiagonal / 2.0;
  return {{
      {center.x, center.y + half_v},   // 1: top
      {center.x - half_h, center.y},   // 2: left
      {center.x, center.y - half_v},   // 3: bottom
      {center.x + half_h, center.y},   // 4: right
      center,                          // 5: intersection
  }};
}

std::vector<Point2> Scenario::default_ris_positions() {
  const auto d = place_diamond({50.0, 0.0});
  return {d.begin(), d.end()};
}

int Scenario::total_elements() const {
  return std::accumulate(elements_per_ris.begin(), elements_per_ris.end(), 0);
}

int Scenario::element_offset(int s) const {
  return std::accumulate(elements_per_ris.begin(), elements_per_ris.begin() + s, 0);
}

void validate(const Scenario& sc) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
  };
  require(sc.num_antennas >= 1, "num_antennas must be >= 1");
  require(sc.num_users >= 1, "num_users must be >= 1");
  require(sc.num_ris() >= 1, "at least one RIS is required");
  require(sc.num_ris() <= 64, "at most 64 RISs are supported");
  for (int l : sc.elements_per_ris) require(l >= 1, "elements_per_ris entries must be >= 1");
  require(sc.ris_positions.size() == sc.elements_per_ris.size(),
          "ris positions count (" + std::to_string(sc.ris_positions.size()) +
              ") must equal elements_per_ris count (" +
              std::to_string(sc.elements_per_ris.size()) + ")");
  require(std::isfinite(sc.power_budget_dbm), "power_budget_dbm must be finite (p_max > 0)");
  require(std::isfinite(sc.noise_power_dbm), "noise_power_dbm must be finite (noise > 0)");
  require(sc.cost_weight >= 0.0, "cost_weight must be >= 0");
  require(std::isfinite(sc.pathloss_ref_db), "pathloss_ref_db must be finite");
  require(sc.exponent_direct >= 0.0 && sc.exponent_ris >= 0.0,
          "path-loss exponents must be >= 0");
  require(sc.user_cluster_radius >= 0.0, "user_cluster.radius must be >= 0");
  require(sc.inner_tolerance > 0.0, "solver.inner_tolerance must be > 0");
  require(sc.outer_tolerance > 0.0, "solver.outer_tolerance must be > 0");
  require(sc.max_inner_iters >= 1, "solver.max_inner_iters must be >= 1");
  require(sc.max_outer_iters >= 1, "solver.max_outer_iters must be >= 1");
  require(sc.price_cap >= 0.0, "solver.price_cap must be >= 0");
  require(sc.exhaustive_cap >= 0, "solver.exhaustive_cap must be >= 0");
  require(sc.price_grid_points >= 2, "solver.price_grid_points must be >= 2");
  require(sc.golden_iterations >= 0, "solver.golden_iterations must be >= 0");
  require(sc.follower_restarts >= 0, "solver.follower_restarts must be >= 0");

  for (std::size_t s = 0; s < sc.ris_positions.size(); ++s) {
    // An RIS may sit on the BS mast (path loss is clamped at 1 m).
    for (std::size_t t = s + 1; t < sc.ris_positions.size(); ++t) {
      require(distance(sc.ris_positions[s], sc.ris_positions[t]) > 0.0,
              "RIS " + std::to_string(s + 1) + " and RIS " + std::to_string(t + 1) +
                  " coincide");
    }
  }
  require(distance(sc.user_cluster_center, sc.bs_position) > sc.user_cluster_radius,
          "user cluster must not contain the BS");
}

namespace {

json point_to_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(field, "expected [x, y] in meters");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T get_number(const json& obj, const char* key, const std::string& path, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer() && !it->is_number_unsigned()) {
      throw ConfigError(path + key, "expected an integer");
    }
  } else {
    if (!it->is_number()) throw ConfigError(path + key, "expected a number");
  }
  return it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(path + key, "unknown field");
  }
}

const json& require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "expected an object");
  return j;
}

json scenario_to_json(const Scenario& sc) {
  json ris_positions = json::array();
  for (auto p : sc.ris_positions) ris_positions.push_back(point_to_json(p));
  return json{
      {"schema_version", Scenario::kSchemaVersion},
      {"num_antennas", sc.num_antennas},
      {"num_users", sc.num_users},
      {"elements_per_ris", sc.elements_per_ris},
      {"power_budget_dbm", sc.power_budget_dbm},
      {"noise_power_dbm", sc.noise_power_dbm},
      {"cost_weight", sc.cost_weight},
      {"pathloss_ref_db", sc.pathloss_ref_db},
      {"exponent_direct", sc.exponent_direct},
      {"exponent_ris", sc.exponent_ris},
      {"bs_position", point_to_json(sc.bs_position)},
      {"ris", {{"positions", ris_positions}}},
      {"user_cluster",
       {{"center", point_to_json(sc.user_cluster_center)},
        {"radius", sc.user_cluster_radius}}},
      {"rng_seed", sc.rng_seed},
      {"solver",
       {{"inner_tolerance", sc.inner_tolerance},
        {"outer_tolerance", sc.outer_tolerance},
        {"max_inner_iters", sc.max_inner_iters},
        {"max_outer_iters", sc.max_outer_iters},
        {"price_cap", sc.price_cap},
        {"log_base", sc.log_base == LogBase::natural ? "natural" : "base2"},
        {"exhaustive_cap", sc.exhaustive_cap},
        {"price_grid_points", sc.price_grid_points},
        {"golden_iterations", sc.golden_iterations},
        {"follower_restarts", sc.follower_restarts}}},
  };
}

Scenario scenario_from_json(const json& doc) {
  require_object(doc, "<root>");
  reject_unknown(doc,
                 {"schema_version", "num_antennas", "num_users", "elements_per_ris",
                  "power_budget_dbm", "noise_power_dbm", "cost_weight", "pathloss_ref_db",
                  "exponent_direct", "exponent_ris", "bs_position", "ris", "user_cluster",
                  "rng_seed", "solver"},
                 "");

  const int version = get_number<int>(doc, "schema_version", "", Scenario::kSchemaVersion);
  if (version != Scenario::kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  }

  Scenario sc;
  sc.num_antennas = get_number<int>(doc, "num_antennas", "", sc.num_antennas);
  sc.num_users = get_number<int>(doc, "num_users", "", sc.num_users);
  sc.power_budget_dbm = get_number<double>(doc, "power_budget_dbm", "", sc.power_budget_dbm);
  sc.noise_power_dbm = get_number<double>(doc, "noise_power_dbm", "", sc.noise_power_dbm);
  sc.cost_weight = get_number<double>(doc, "cost_weight", "", sc.cost_weight);
  sc.pathloss_ref_db = get_number<double>(doc, "pathloss_ref_db", "", sc.pathloss_ref_db);
  sc.exponent_direct = get_number<double>(doc, "exponent_direct", "", sc.exponent_direct);
  sc.exponent_ris = get_number<double>(doc, "exponent_ris", "", sc.exponent_ris);
  sc.rng_seed = get_number<std::uint64_t>(doc, "rng_seed", "", sc.rng_seed);
  if (auto it = doc.find("bs_position"); it != doc.end()) {
    sc.bs_position = point_from_json(*it, "bs_position");
  }

  if (auto it = doc.find("ris"); it != doc.end()) {
    const json& ris = require_object(*it, "ris");
    reject_unknown(ris, {"positions", "diamond_center"}, "ris.");
    const bool has_positions = ris.contains("positions");
    const bool has_center = ris.contains("diamond_center");
    if (has_positions && has_center) {
      throw ConfigError("ris", "give either positions or diamond_center, not both");
    }
    if (has_positions) {
      const json& list = ris["positions"];
      if (!list.is_array() || list.empty()) {
        throw ConfigError("ris.positions", "expected a non-empty list of [x, y]");
      }
      sc.ris_positions.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        sc.ris_positions.push_back(
            point_from_json(list[i], "ris.positions[" + std::to_string(i) + "]"));
      }
    } else if (has_center) {
      const auto d = place_diamond(point_from_json(ris["diamond_center"], "ris.diamond_center"));
      sc.ris_positions.assign(d.begin(), d.end());
    }
  }

  if (auto it = doc.find("elements_per_ris"); it != doc.end()) {
    if (it->is_number_integer()) {
      sc.elements_per_ris.assign(sc.ris_positions.size(), it->get<int>());
    } else if (it->is_array()) {
      sc.elements_per_ris.clear();
      for (const auto& v : *it) {
        if (!v.is_number_integer()) {
          throw ConfigError("elements_per_ris", "expected integers");
        }
        sc.elements_per_ris.push_back(v.get<int>());
      }
    } else {
      throw ConfigError("elements_per_ris", "expected an integer or a list of integers");
    }
  } else if (sc.elements_per_ris.size() != sc.ris_positions.size()) {
    sc.elements_per_ris.assign(sc.ris_positions.size(), 20);
  }

  if (auto it = doc.find("user_cluster"); it != doc.end()) {
    const json& uc = require_object(*it, "user_cluster");
    reject_unknown(uc, {"center", "radius"}, "user_cluster.");
    if (auto c = uc.find("center"); c != uc.end()) {
      sc.user_cluster_center = point_from_json(*c, "user_cluster.center");
    }
    sc.user_cluster_radius =
        get_number<double>(uc, "radius", "user_cluster.", sc.user_cluster_radius);
  }

  if (auto it = doc.find("solver"); it != doc.end()) {
    const json& so = require_object(*it, "solver");
    const std::string p = "solver.";
    reject_unknown(so,
                   {"inner_tolerance", "outer_tolerance", "max_inner_iters",
                    "max_outer_iters", "price_cap", "log_base", "exhaustive_cap",
                    "price_grid_points", "golden_iterations", "follower_restarts"},
                   p);
    sc.inner_tolerance = get_number<double>(so, "inner_tolerance", p, sc.inner_tolerance);
    sc.outer_tolerance = get_number<double>(so, "outer_tolerance", p, sc.outer_tolerance);
    sc.max_inner_iters = get_number<int>(so, "max_inner_iters", p, sc.max_inner_iters);
    sc.max_outer_iters = get_number<int>(so, "max_outer_iters", p, sc.max_outer_iters);
    sc.price_cap = get_number<double>(so, "price_cap", p, sc.price_cap);
    sc.exhaustive_cap = get_number<int>(so, "exhaustive_cap", p, sc.exhaustive_cap);
    sc.price_grid_points = get_number<int>(so, "price_grid_points", p, sc.price_grid_points);
    sc.golden_iterations = get_number<int>(so, "golden_iterations", p, sc.golden_iterations);
    sc.follower_restarts = get_number<int>(so, "follower_restarts", p, sc.follower_restarts);
    if (auto lb = so.find("log_base"); lb != so.end()) {
      if (*lb == "natural") {
        sc.log_base = LogBase::natural;
      } else if (*lb == "base2") {
        sc.log_base = LogBase::base2;
      } else {
        throw ConfigError("solver.log_base", "expected \"natural\" or \"base2\"");
      }
    }
  }
  return sc;
}

}  // namespace

Scenario load_scenario(std::string_view config_text) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  Scenario sc;
  try {
    sc = scenario_from_json(doc);
  } catch (const json::exception& e) {
    throw ConfigError("<document>", e.what());
  }
  validate(sc);
  return sc;
}

std::string serialize_scenario(const Scenario& scenario) {
  return scenario_to_json(scenario).dump(2) + "\n";
}

void apply_override(Scenario& scenario, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "override must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  json doc = scenario_to_json(scenario);
  if (key == "ris.diamond_center_x" || key == "ris.diamond_center") {
    Point2 center{};
    if (key == "ris.diamond_center") {
      center = point_from_json(value, key);
    } else {
      if (!value.is_number()) throw ConfigError(key, "expected a number");
      center = {value.get<double>(), 0.0};
    }
    doc["ris"] = json{{"diamond_center", point_to_json(center)}};
  } else {
    json::json_pointer ptr("/" + [&] {
      std::string path = key;
      for (auto& c : path) {
        if (c == '.') c = '/';
      }
      return path;
    }());
    if (!doc.contains(ptr)) throw ConfigError(key, "unknown field");
    doc[ptr] = value;
  }
  Scenario patched;
  try {
    patched = scenario_from_json(doc);
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
  validate(patched);
  scenario = std::move(patched);
}

std::vector<Point2> sample_users(const Scenario& scenario, Rng& rng) {
  std::vector<Point2> users;
  users.reserve(static_cast<std::size_t>(scenario.num_users));
  const double radius = scenario.user_cluster_radius;
  for (int k = 0; k < scenario.num_users; ++k) {
    // sqrt of a uniform gives an area-uniform radius.
    const double r = radius * std::sqrt(rng.uniform());
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    users.push_back({scenario.user_cluster_center.x + r * std::cos(a),
                     scenario.user_cluster_center.y + r * std::sin(a)});
  }
  return users;
}

Geometry build_geometry(const Scenario& scenario) {
  Rng rng(scenario.rng_seed, StreamClass::users);
  return Geometry{scenario.bs_position, scenario.ris_positions, sample_users(scenario, rng)};
}

}  // namespace rispricing
