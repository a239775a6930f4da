#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rispricing/harness.hpp"
#include "rispricing/serialization.hpp"

using namespace rispricing;

namespace {

int count_fields(const std::string& line) {
  int n = 1;
  for (char c : line) n += c == ',' ? 1 : 0;
  return n;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

// Small default-geometry base so sweeps stay fast.
Scenario light_base() {
  Scenario sc;
  sc.elements_per_ris = {4, 4, 4, 4, 4};
  return sc;
}

}  // namespace

TEST_CASE("names") {
  for (SchemeKind k : {SchemeKind::stackelberg_uniform, SchemeKind::stackelberg_nonuniform,
                       SchemeKind::random_uniform, SchemeKind::random_nonuniform}) {
    CHECK(parse_scheme_kind(to_string(k)) == k);
  }
  CHECK(parse_scheme_kind("random") == SchemeKind::random_nonuniform);
  CHECK_THROWS_AS(parse_scheme_kind("auction"), ValidationError);
  CHECK(parse_sweep_variable("power") == SweepVariable::power_budget_dbm);
  CHECK(parse_sweep_variable("location") == SweepVariable::diamond_center_x);
  CHECK_THROWS_AS(parse_sweep_variable("height"), ValidationError);
}

TEST_CASE("default sweep values") {
  CHECK(default_power_values() == std::vector<double>{-10, -5, 0, 5, 10, 15, 20});
  const auto loc = default_location_values(8);
  CHECK(loc.size() == 8);
  CHECK(loc.front() == 12.5);
  CHECK(loc.back() == 200.0);
}

TEST_CASE("sweep spec validation") {
  SweepSpec spec;
  spec.values = {10.0};
  spec.schemes = {SchemeKind::random_uniform};
  spec.seeds = {0};
  CHECK_NOTHROW(validate(spec));

  SweepSpec bad = spec;
  bad.seeds.clear();
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = spec;
  bad.values.clear();
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = spec;
  bad.values = {35.0};
  CHECK_THROWS_AS(run_sweep(bad, light_base()), ValidationError);
  bad = spec;
  bad.variable = SweepVariable::diamond_center_x;
  bad.values = {10.0};
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("invalid sweep point names itself") {
  SweepSpec spec;
  spec.values = {0.0};
  spec.schemes = {SchemeKind::random_uniform};
  spec.seeds = {4};
  Scenario base = light_base();
  base.num_users = 0;
  try {
    run_sweep(spec, base);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("power_budget_dbm=0") != std::string::npos);
    CHECK(what.find("seed=4") != std::string::npos);
  }
}

TEST_CASE("scenario at a sweep point") {
  const Scenario p = scenario_at(light_base(), SweepVariable::power_budget_dbm, 20.0, 7);
  CHECK(p.power_budget_dbm == 20.0);
  CHECK(p.rng_seed == 7);
  const Scenario l = scenario_at(light_base(), SweepVariable::diamond_center_x, 100.0, 1);
  CHECK(l.ris_positions[4] == Point2{100.0, 0.0});
  CHECK(l.ris_positions[3] == Point2{112.5, 0.0});
}

TEST_CASE("degenerate sweep: one data row plus the mean") {
  SweepSpec spec;
  spec.values = {10.0};
  spec.schemes = {SchemeKind::stackelberg_nonuniform};
  spec.seeds = {3};
  const SweepTable t = run_sweep(spec, light_base());
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].seed == std::optional<std::uint64_t>{3});
  CHECK_FALSE(t.rows[1].seed.has_value());
  CHECK(t.rows[1].label == "mean");
  CHECK(t.rows[1].u_bs == t.rows[0].u_bs);
  REQUIRE(t.stderr_rows.size() == 1);
  CHECK(t.stderr_rows[0].u_bs == 0.0);

  const auto lines = lines_of(to_csv(t));
  REQUIRE(lines.size() == 3);
  CHECK(lines[2].find(",mean,") != std::string::npos);
}

TEST_CASE("table layout and aggregates") {
  SweepSpec spec;
  spec.values = {0.0, 10.0};
  spec.schemes = {SchemeKind::stackelberg_uniform, SchemeKind::random_nonuniform};
  spec.seeds = {0, 1, 2};
  spec.audit = true;
  const SweepTable t = run_sweep(spec, light_base());
  CHECK(t.rows.size() == 2 * 2 * 4);
  CHECK(t.stderr_rows.size() == 4);

  // value -> scheme -> seeds, then mean.
  CHECK(t.rows[0].value == 0.0);
  CHECK(t.rows[0].scheme == SchemeKind::stackelberg_uniform);
  CHECK(t.rows[4].scheme == SchemeKind::random_nonuniform);
  CHECK(t.rows[8].value == 10.0);

  const double mean = (t.rows[0].u_bs + t.rows[1].u_bs + t.rows[2].u_bs) / 3.0;
  CHECK(t.rows[3].u_bs == doctest::Approx(mean).epsilon(1e-14));
  CHECK(t.means(SchemeKind::stackelberg_uniform).size() == 2);

  double ss = 0.0;
  for (int i = 0; i < 3; ++i) ss += (t.rows[i].u_bs - mean) * (t.rows[i].u_bs - mean);
  CHECK(t.stderr_rows[0].u_bs == doctest::Approx(std::sqrt(ss / 2.0 / 3.0)));

  for (const auto& r : t.rows) {
    CHECK(r.price.size() == 5);
    CHECK(r.purchased.size() == 5);
  }
}

TEST_CASE("CSV schema") {
  CHECK(csv_header(5).size() == 7 + 3 * 5);
  CHECK(csv_header(2) == std::vector<std::string>{"variable", "value", "scheme", "seed", "u_bs",
                                                  "rounds", "converged", "V_1", "V_2", "q_1",
                                                  "q_2", "psi_1", "psi_2"});

  SweepTable empty;
  empty.num_ris = 3;
  const std::string text = to_csv(empty);
  CHECK(lines_of(text).size() == 1);
  CHECK(text.back() == '\n');
  CHECK(count_fields(lines_of(text)[0]) == 16);

  SweepSpec spec;
  spec.values = {5.0};
  spec.schemes = {SchemeKind::random_uniform};
  spec.seeds = {0, 1};
  const SweepTable t = run_sweep(spec, light_base());
  for (const auto& line : lines_of(to_csv(t))) CHECK(count_fields(line) == 22);
  for (const auto& line : lines_of(stderr_csv(t))) CHECK(count_fields(line) == 22);
  CHECK(lines_of(stderr_csv(t))[1].find(",stderr,") != std::string::npos);

  // Full precision: the written value parses back to the same double.
  const auto fields = lines_of(to_csv(t))[1];
  const auto u_text = fields.substr(0, fields.find(",0,") + 1);
  CHECK(!u_text.empty());
  std::stringstream row(lines_of(to_csv(t))[1]);
  std::string cell;
  for (int i = 0; i < 5; ++i) std::getline(row, cell, ',');
  CHECK(std::stod(cell) == t.rows[0].u_bs);
}

TEST_CASE("sweeps are deterministic") {
  SweepSpec spec;
  spec.variable = SweepVariable::diamond_center_x;
  spec.values = {12.5, 150.0};
  spec.schemes = {SchemeKind::stackelberg_nonuniform, SchemeKind::random_uniform};
  spec.seeds = {0, 5};
  spec.workers = 1;
  const std::string a = to_csv(run_sweep(spec, light_base()));
  spec.workers = 4;
  const std::string b = to_csv(run_sweep(spec, light_base()));
  CHECK(a == b);
}

TEST_CASE("emit_csv") {
  const auto dir = std::filesystem::temp_directory_path() / "rispricing_harness_test";
  std::filesystem::create_directories(dir);
  SweepTable t;
  t.num_ris = 2;
  const auto path = dir / "out.csv";
  emit_csv(t, path);
  emit_csv(t, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == to_csv(t));

  const auto bad = dir / "missing" / "deeper" / "out.csv";
  try {
    emit_csv(t, bad);
    FAIL("expected an I/O error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot script") {
  SweepTable t;
  t.num_ris = 5;
  const std::string py = plot_script(t, "sweep.csv");
  CHECK(py.find("sweep.csv") != std::string::npos);
  CHECK(py.find("matplotlib") != std::string::npos);
  t.variable = SweepVariable::diamond_center_x;
  CHECK(plot_script(t, "loc.csv").find("mean RIS price") != std::string::npos);
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
  // Ties take average ranks.
  CHECK(spearman({1, 2, 3}, {1, 1, 2}) == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK(std::isnan(spearman({1, 2, 3}, {5, 5, 5})));
  CHECK(std::isnan(spearman({1}, {2})));
}
