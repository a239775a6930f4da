#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rispricing/leader.hpp"
#include "rispricing/oracle.hpp"
#include "support.hpp"

using namespace rispricing;
using nlohmann::json;

namespace {

json load_fixture() {
  std::ifstream in(RISPRICING_FIXTURE_DIR "/oracle_tiny.json");
  REQUIRE(in.good());
  return json::parse(in);
}

}  // namespace

TEST_CASE("single user without RIS: oracle finds the matched-filter rate") {
  ChannelSet ch = testsupport::random_channels(1, 2, 1, {1});
  ch.bs_ris.setZero();
  ch.ris_user.setZero();
  const Scenario sc = testsupport::scenario_for(2, 1, {1});
  OracleBudget budget;
  budget.restarts = 3;
  const double expected =
      std::log1p(sc.power_budget_w() * ch.direct.col(0).squaredNorm() / sc.noise_power_w());
  CHECK(oracle_best_rate(ch, 0, sc, budget) == doctest::Approx(expected).epsilon(1e-6));
  const OracleFollowerResult r = oracle_follower(ch, PriceVector::uniform(1, 0.01), sc, budget);
  CHECK(r.mask == 0);
  CHECK(r.utility == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("oracle refuses large instances") {
  const Scenario sc = testsupport::scenario_for(3, 2, {2});
  const ChannelSet ch = testsupport::random_channels(1, 3, 2, {2});
  CHECK_THROWS_AS(oracle_follower(ch, PriceVector::zeros(1), sc, OracleBudget{}), OracleSizeError);
  const Scenario sc2 = testsupport::scenario_for(2, 2, {3, 2});
  const ChannelSet ch2 = testsupport::random_channels(1, 2, 2, {3, 2});
  CHECK_THROWS_AS(oracle_follower(ch2, PriceVector::zeros(2), sc2, OracleBudget{}),
                  OracleSizeError);
}

TEST_CASE("oracle is deterministic under its seed") {
  const TinyInstance inst = make_tiny_instance(4);
  OracleBudget budget;
  budget.seed = 4;
  const OracleFollowerResult a = oracle_follower(inst.channels, inst.prices, inst.scenario, budget);
  const OracleFollowerResult b = oracle_follower(inst.channels, inst.prices, inst.scenario, budget);
  CHECK(a.utility == b.utility);
  CHECK(a.rate_by_mask == b.rate_by_mask);
  CHECK(make_tiny_instance(4).channels == inst.channels);
}

TEST_CASE("tiny instances") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const TinyInstance inst = make_tiny_instance(seed);
    CHECK(inst.scenario.num_antennas <= 2);
    CHECK(inst.scenario.num_users <= 2);
    CHECK(inst.scenario.total_elements() <= 4);
    CHECK(inst.scenario.num_ris() == static_cast<int>(1 + seed % 3));
    CHECK_NOTHROW(validate(inst.scenario));
    CHECK_NOTHROW(check_prices(inst.prices, inst.scenario.price_cap));
  }
}

TEST_CASE("frozen oracle fixture") {
  const json fx = load_fixture();
  REQUIRE(fx.at("schema_version") == 1);
  const auto& cases = fx.at("cases");
  REQUIRE(cases.size() == 25);

  int matched = 0;
  for (const auto& c : cases) {
    const auto seed = c.at("seed").get<std::uint64_t>();
    CAPTURE(seed);
    const TinyInstance inst = make_tiny_instance(seed);
    REQUIRE(inst.prices.q == c.at("prices").get<std::vector<double>>());

    // Follower: main solver within the band around the brute-force value.
    const double oracle_u = c.at("oracle_utility").get<double>();
    FollowerResponseCache cache(inst.channels, inst.scenario);
    const FollowerState main = cache.best_response(inst.prices, true);
    CHECK(main.utility <= oracle_u + 1e-6);
    CHECK(main.utility >= oracle_u - 0.05 * std::abs(oracle_u));
    matched += main.phases.mask() == c.at("oracle_mask").get<PurchaseMask>() ? 1 : 0;

    // The oracle still reproduces its fixture.
    OracleBudget budget;
    budget.seed = seed;
    budget.restarts = fx.at("restarts").get<int>();
    const OracleFollowerResult again =
        oracle_follower(inst.channels, inst.prices, inst.scenario, budget);
    CHECK(again.utility == doctest::Approx(oracle_u).epsilon(1e-9));

    // Leader: uniform price search vs the dense scan.
    const double dense_revenue = c.at("uniform_revenue").get<double>();
    const EquilibriumReport r = stackelberg_solve(cache, PricingScheme::uniform);
    double revenue = 0.0;
    for (double v : r.ris_utilities) revenue += v;
    CHECK(revenue >= 0.99 * dense_revenue);

    if (inst.scenario.num_ris() == 1) {
      const auto coarse = price_grid(inst.scenario.price_cap, inst.scenario.price_grid_points);
      double cell = 0.0;
      for (std::size_t i = 1; i < coarse.size(); ++i) cell = std::max(cell, coarse[i] - coarse[i - 1]);
      CHECK(std::abs(r.prices[0] - c.at("uniform_price").get<double>()) <= cell);
    }
  }
  CHECK(matched >= 20);
}

TEST_CASE("leader grid scan") {
  const TinyInstance inst = make_tiny_instance(2);
  FollowerResponseCache cache(inst.channels, inst.scenario);

  SUBCASE("on the solver's own grid it agrees with the solver") {
    Scenario coarse = inst.scenario;
    coarse.golden_iterations = 0;
    FollowerResponseCache c2(inst.channels, coarse);
    const EquilibriumReport r = stackelberg_solve(c2, PricingScheme::uniform);
    const OracleLeaderResult o =
        oracle_leader_grid(c2, price_grid(coarse.price_cap, coarse.price_grid_points));
    CHECK(o.price == r.prices[0]);
    double revenue = 0.0;
    for (double v : r.ris_utilities) revenue += v;
    CHECK(o.revenue == doctest::Approx(revenue));
  }

  SUBCASE("zero price cap") {
    Scenario capped = inst.scenario;
    capped.price_cap = 0.0;
    const OracleLeaderResult o = oracle_leader_grid(inst.channels, capped, {0.0});
    CHECK(o.price == 0.0);
    CHECK(o.revenue == 0.0);
  }
}
