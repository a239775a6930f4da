#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rispricing/channel.hpp"
#include "rispricing/leader.hpp"
#include "rispricing/rng.hpp"
#include "support.hpp"

using namespace rispricing;

namespace {

struct Game {
  Scenario sc;
  ChannelSet ch;
};

// Default geometry with fewer, smaller RISs: cheap but realistic.
Game small_game(std::uint64_t seed, int s_count = 3, int elements = 6) {
  Game g;
  g.sc.rng_seed = seed;
  g.sc.elements_per_ris.assign(static_cast<std::size_t>(s_count), elements);
  g.sc.ris_positions.resize(static_cast<std::size_t>(s_count));
  validate(g.sc);
  g.ch = generate_channels(g.sc, build_geometry(g.sc));
  return g;
}

void check_consistent(const EquilibriumReport& r, const Game& g) {
  CHECK(r.bs_utility ==
        doctest::Approx(bs_utility(g.ch, r.follower.phases, r.follower.beamformers, r.prices, g.sc))
            .epsilon(1e-12));
  for (int s = 0; s < g.sc.num_ris(); ++s) {
    CHECK(r.ris_utilities[s] ==
          doctest::Approx(ris_utility(r.prices, r.follower.phases, s, g.sc)).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("price grids") {
  const auto g = price_grid(0.1, 64);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 0.1);
  CHECK(g.size() <= 64);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(std::adjacent_find(g.begin(), g.end()) == g.end());
  CHECK(*std::upper_bound(g.begin(), g.end(), 0.0) <= 0.1 * 1e-4 * 1.0000001);

  const auto l = linear_grid(2.0, 5);
  CHECK(l == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
  CHECK(price_grid(0.0, 64) == std::vector<double>{0.0});
}

TEST_CASE("free reflection is always sold, so the cap is charged") {
  Game g = small_game(1);
  g.sc.cost_weight = 0.0;
  FollowerResponseCache cache(g.ch, g.sc);
  const PriceVector current = PriceVector::uniform(3, 0.05);
  for (int s = 0; s < 3; ++s) CHECK(price_best_response(s, current, cache) == g.sc.price_cap);
}

TEST_CASE("a useless RIS cannot sell") {
  Game g = small_game(2);
  const int off = g.ch.block_offset(1);
  g.ch.bs_ris.middleRows(off, 6).setZero();
  g.ch.ris_user.middleRows(off, 6).setZero();
  FollowerResponseCache cache(g.ch, g.sc);
  PriceVector current = PriceVector::zeros(3);
  current.scheme = PricingScheme::non_uniform;
  // Only follower convergence noise is left to sell.
  const double bound = 1e-4 * g.sc.price_cap;
  CHECK(price_best_response(1, current, cache) <= bound);
  const EquilibriumReport r = stackelberg_solve(cache, PricingScheme::non_uniform);
  CHECK(r.ris_utilities[1] <= bound * 6);
  CHECK_THROWS_AS(price_best_response(3, current, cache), std::invalid_argument);
}

TEST_CASE("best response does not lower the mover's revenue") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Game g = small_game(seed);
    FollowerResponseCache cache(g.ch, g.sc);
    Rng rng(seed, StreamClass::prices);
    PriceVector q = PriceVector::zeros(3);
    q.scheme = PricingScheme::non_uniform;
    for (auto& p : q.q) p = rng.uniform(0.0, 0.01);
    for (int s = 0; s < 3; ++s) {
      auto revenue = [&](const PriceVector& p) {
        return ris_utility(p, PhaseConfig::with_mask(g.ch, cache.best_mask(p)), s, g.sc);
      };
      const double before = revenue(q);
      PriceVector moved = q;
      moved.q[static_cast<std::size_t>(s)] = price_best_response(s, q, cache);
      CHECK(revenue(moved) >= before);
    }
  }
}

TEST_CASE("single leader") {
  const Game g = small_game(4, 1, 12);
  FollowerResponseCache cache(g.ch, g.sc);
  const EquilibriumReport r = stackelberg_solve(cache, PricingScheme::non_uniform);
  CHECK(r.converged);
  CHECK(r.rounds <= 2);
  CHECK(r.se.accepted);
  CHECK(r.se.max_improvement[0] <= 0.0);
  CHECK(r.prices[0] == price_best_response(0, PriceVector::zeros(1), cache));
  check_consistent(r, g);
}

TEST_CASE("non-uniform equilibrium") {
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Game g = small_game(seed);
    FollowerResponseCache cache(g.ch, g.sc);
    const EquilibriumReport r = stackelberg_solve(cache, PricingScheme::non_uniform);
    check_consistent(r, g);
    CHECK(r.method == "stackelberg");
    CHECK(r.price_trace.size() == static_cast<std::size_t>(r.rounds) + 1);
    if (r.converged) {
      // Last round moved no price by the tolerance.
      const auto& a = r.price_trace[r.price_trace.size() - 2];
      const auto& b = r.price_trace.back();
      for (std::size_t s = 0; s < a.size(); ++s) {
        CHECK(std::abs(a[s] - b[s]) < g.sc.outer_tolerance * g.sc.price_cap);
      }
    }
    accepted += r.converged && r.se.accepted ? 1 : 0;

    // Follower does at least as well as buying nothing with matched filters.
    const PhaseConfig idle = PhaseConfig::idle(g.ch);
    FollowerState null = initial_state(g.ch, idle, g.sc);
    CHECK(r.bs_utility >= bs_utility(g.ch, idle, null.beamformers, r.prices, g.sc) - 1e-12);
  }
  CHECK(accepted >= 3);
}

TEST_CASE("non-convergence is reported, not thrown") {
  Game g = small_game(5);
  g.sc.max_outer_iters = 1;
  g.sc.outer_tolerance = 1e-12;
  FollowerResponseCache cache(g.ch, g.sc);
  EquilibriumReport r;
  CHECK_NOTHROW(r = stackelberg_solve(cache, PricingScheme::non_uniform));
  CHECK(r.rounds == 1);
  CHECK(r.price_trace.size() == 2);
  if (!r.converged) CHECK(r.price_trace[0] != r.price_trace[1]);
}

TEST_CASE("uniform pricing") {
  SUBCASE("identical RISs earn identical revenue") {
    Game g = small_game(6, 2, 8);
    g.ch.bs_ris.middleRows(8, 8) = g.ch.bs_ris.topRows(8);
    g.ch.ris_user.middleRows(8, 8) = g.ch.ris_user.topRows(8);
    FollowerResponseCache cache(g.ch, g.sc);
    const EquilibriumReport r = stackelberg_solve(cache, PricingScheme::uniform);
    CHECK(r.prices[0] == r.prices[1]);
    CHECK(r.ris_utilities[0] == r.ris_utilities[1]);
    CHECK(r.ris_utilities[0] > 0.0);
  }

  SUBCASE("optimum beats every grid price") {
    const Game g = small_game(7);
    FollowerResponseCache cache(g.ch, g.sc);
    const EquilibriumReport r = stackelberg_solve(cache, PricingScheme::uniform);
    CHECK(r.prices.scheme == PricingScheme::uniform);
    check_consistent(r, g);
    double total = 0.0;
    for (double v : r.ris_utilities) total += v;
    for (double q : price_grid(g.sc.price_cap, g.sc.price_grid_points)) {
      const PriceVector p = PriceVector::uniform(3, q);
      const PhaseConfig pc = PhaseConfig::with_mask(g.ch, cache.best_mask(p));
      double other = 0.0;
      for (int s = 0; s < 3; ++s) other += ris_utility(p, pc, s, g.sc);
      CHECK(total >= other);
    }
  }
}

TEST_CASE("deviation scan") {
  const Game g = small_game(8);
  FollowerResponseCache cache(g.ch, g.sc);

  SUBCASE("exact grid equilibrium has nothing to gain on its grid") {
    Game one = small_game(8, 1, 10);
    one.sc.golden_iterations = 0;
    FollowerResponseCache c1(one.ch, one.sc);
    const EquilibriumReport r = stackelberg_solve(c1, PricingScheme::non_uniform);
    const auto grid = price_grid(one.sc.price_cap, one.sc.price_grid_points);
    const SeVerification se = verify_se(r, c1, grid);
    CHECK(se.grid == grid);
    CHECK(se.max_improvement[0] <= 0.0);
    CHECK(se.accepted);
  }

  SUBCASE("denser grids find at least as much") {
    Rng rng(8, StreamClass::prices, {1});
    const EquilibriumReport r = random_pricing(cache, rng);
    const auto g17 = linear_grid(g.sc.price_cap, 17);
    const auto g33 = linear_grid(g.sc.price_cap, 33);
    const SeVerification a = verify_se(r, cache, g17);
    const SeVerification b = verify_se(r, cache, g33);
    for (int s = 0; s < 3; ++s) CHECK(b.max_improvement[s] >= a.max_improvement[s]);
  }

  SUBCASE("random prices usually leave money on the table") {
    int profitable = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed, StreamClass::prices);
      const EquilibriumReport r = random_pricing(cache, rng);
      profitable += r.se.accepted ? 0 : 1;
    }
    CHECK(profitable >= 8);
  }

  SUBCASE("standalone overload matches") {
    const EquilibriumReport r = stackelberg_solve(g.ch, g.sc, PricingScheme::non_uniform);
    const SeVerification se = verify_se(r, g.ch, g.sc, 32);
    CHECK(se.grid == price_grid(g.sc.price_cap, 32));
    CHECK(se.max_improvement.size() == 3);
  }
}

TEST_CASE("random pricing") {
  const Game g = small_game(9);
  FollowerResponseCache cache(g.ch, g.sc);

  SUBCASE("reproducible") {
    Rng a(42, StreamClass::prices);
    Rng b(42, StreamClass::prices);
    const EquilibriumReport ra = random_pricing(cache, a);
    const EquilibriumReport rb = random_pricing(cache, b);
    CHECK(ra.prices == rb.prices);
    CHECK(ra.bs_utility == rb.bs_utility);
    check_consistent(ra, g);
    for (double q : ra.prices.q) CHECK((q >= 0.0 && q <= g.sc.price_cap));
  }

  SUBCASE("uniform draw is shared") {
    Rng rng(1, StreamClass::prices);
    const EquilibriumReport r = random_pricing(cache, rng, PricingScheme::uniform);
    CHECK(r.prices[0] == r.prices[1]);
    CHECK(r.prices[1] == r.prices[2]);
  }

  SUBCASE("zero price cap is the free-RIS case") {
    Scenario free_sc = g.sc;
    free_sc.price_cap = 0.0;
    Rng rng(3, StreamClass::prices);
    const EquilibriumReport r = random_pricing(g.ch, free_sc, rng);
    CHECK(r.prices == PriceVector{{0.0, 0.0, 0.0}, PricingScheme::non_uniform});
    CHECK(r.bs_utility == doctest::Approx(cache.best_response(PriceVector::zeros(3)).utility));
    CHECK(r.follower.phases.mask() == cache.best_mask(PriceVector::zeros(3)));
  }
}
