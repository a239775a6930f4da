#include "rispricing/leader.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace rispricing {

namespace {

constexpr double kGoldenRatio = 0.6180339887498949;  // (sqrt(5) - 1) / 2
constexpr double kTieTolerance = 1e-12;

bool strictly_better(double a, double b) {
  return a > b + kTieTolerance * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

struct PriceChoice {
  double price = 0.0;
  double value = 0.0;
};

/// Grid scan, then threshold climbing and golden-section refinement around
/// the best grid point. Grid ties go to the lower price; a refined point must
/// strictly beat the grid.
PriceChoice maximize_over_prices(const std::function<double(double)>& objective,
                                 const std::vector<double>& grid, int golden_iterations) {
  PriceChoice best{grid.front(), objective(grid.front())};
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = objective(grid[i]);
    if (strictly_better(v, best.value)) {
      best = {grid[i], v};
      best_index = i;
    }
  }

  auto consider = [&](double q, double v) {
    if (strictly_better(v, best.value)) best = {q, v};
  };

  double a = grid[best_index == 0 ? 0 : best_index - 1];
  double b = grid[std::min(best_index + 1, grid.size() - 1)];

  // Revenue rises with price until the follower drops a purchase. Climb to
  // the edge of the rising piece in each cell next to the best point.
  auto climb = [&](double lo, double hi) {
    double f_lo = objective(lo);
    for (int it = 0; it < golden_iterations && hi > lo; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f_mid = objective(mid);
      consider(mid, f_mid);
      if (f_mid >= f_lo) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
  };
  climb(a, best.price);
  climb(best.price, b);

  if (golden_iterations > 0 && b > a) {
    double x1 = b - kGoldenRatio * (b - a);
    double x2 = a + kGoldenRatio * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    consider(x1, f1);
    consider(x2, f2);
    for (int it = 0; it < golden_iterations; ++it) {
      if (f2 > f1) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGoldenRatio * (b - a);
        f2 = objective(x2);
        consider(x2, f2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGoldenRatio * (b - a);
        f1 = objective(x1);
        consider(x1, f1);
      }
    }
  }
  return best;
}

double revenue_of(int s, PurchaseMask mask, double price, const Scenario& scenario) {
  return ((mask >> s) & 1U) != 0 ? price * scenario.elements_per_ris[s] : 0.0;
}

}  // namespace

std::vector<double> linear_grid(double q_max, int points) {
  std::vector<double> g;
  if (points <= 1) return {0.0};
  g.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g.push_back(q_max * i / (points - 1));
  g.back() = q_max;
  return g;
}

std::vector<double> price_grid(double q_max, int points) {
  const int n_lin = std::max(2, points / 2 + 1);
  const int n_geo = std::max(0, points - n_lin);
  std::vector<double> g = linear_grid(q_max, n_lin);
  for (int j = 0; j < n_geo; ++j) {
    const double exponent = -4.0 + 4.0 * j / std::max(1, n_geo);
    g.push_back(q_max * std::pow(10.0, exponent));
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

double price_best_response(int s, const PriceVector& current, FollowerResponseCache& follower) {
  const Scenario& sc = follower.scenario();
  if (s < 0 || s >= sc.num_ris()) throw std::invalid_argument("leader index out of range");
  PriceVector trial = current;
  trial.scheme = PricingScheme::non_uniform;
  auto revenue = [&](double q) {
    trial.q[static_cast<std::size_t>(s)] = q;
    return revenue_of(s, follower.best_mask(trial), q, sc);
  };
  return maximize_over_prices(revenue, price_grid(sc.price_cap, sc.price_grid_points),
                              sc.golden_iterations)
      .price;
}

double price_best_response(int s, const PriceVector& current, const ChannelSet& channels,
                           const Scenario& scenario) {
  FollowerResponseCache cache(channels, scenario);
  return price_best_response(s, current, cache);
}

EquilibriumReport assemble_report(FollowerResponseCache& follower, const PriceVector& prices,
                                  std::string method) {
  const Scenario& sc = follower.scenario();
  EquilibriumReport r;
  r.method = std::move(method);
  r.scheme = prices.scheme;
  r.prices = prices;
  r.follower = follower.best_response(prices);
  r.bs_utility = bs_utility(follower.channels(), r.follower.phases, r.follower.beamformers,
                            prices, sc);
  r.ris_utilities.resize(static_cast<std::size_t>(sc.num_ris()));
  for (int s = 0; s < sc.num_ris(); ++s) {
    r.ris_utilities[s] = ris_utility(prices, r.follower.phases, s, sc);
  }
  return r;
}

EquilibriumReport stackelberg_solve(FollowerResponseCache& follower, PricingScheme scheme) {
  const Scenario& sc = follower.scenario();
  const int s_count = sc.num_ris();
  const std::vector<double> grid = price_grid(sc.price_cap, sc.price_grid_points);

  std::vector<std::vector<double>> trace;
  PriceVector prices;
  int rounds = 0;
  bool converged = false;

  if (scheme == PricingScheme::uniform) {
    auto total_revenue = [&](double q) {
      const PriceVector trial = PriceVector::uniform(s_count, q);
      const PurchaseMask mask = follower.best_mask(trial);
      double v = 0.0;
      for (int s = 0; s < s_count; ++s) v += revenue_of(s, mask, q, sc);
      return v;
    };
    const PriceChoice choice = maximize_over_prices(total_revenue, grid, sc.golden_iterations);
    prices = PriceVector::uniform(s_count, choice.price);
    trace.push_back(prices.q);
    rounds = 1;
    converged = true;
  } else {
    prices = {std::vector<double>(static_cast<std::size_t>(s_count), sc.price_cap),
              PricingScheme::non_uniform};
    trace.push_back(prices.q);
    for (rounds = 1; rounds <= sc.max_outer_iters; ++rounds) {
      const std::vector<double> before = prices.q;
      for (int s = 0; s < s_count; ++s) {
        prices.q[static_cast<std::size_t>(s)] = price_best_response(s, prices, follower);
      }
      trace.push_back(prices.q);
      double change = 0.0;
      for (int s = 0; s < s_count; ++s) change = std::max(change, std::abs(prices.q[s] - before[s]));
      if (change < sc.outer_tolerance * sc.price_cap) {
        converged = true;
        break;
      }
    }
    rounds = std::min(rounds, sc.max_outer_iters);
  }

  EquilibriumReport report = assemble_report(follower, prices, "stackelberg");
  report.rounds = rounds;
  report.converged = converged;
  report.price_trace = std::move(trace);
  report.se = verify_se(report, follower, grid);
  return report;
}

EquilibriumReport stackelberg_solve(const ChannelSet& channels, const Scenario& scenario,
                                    PricingScheme scheme) {
  FollowerResponseCache cache(channels, scenario);
  return stackelberg_solve(cache, scheme);
}

SeVerification verify_se(const EquilibriumReport& report, FollowerResponseCache& follower,
                         std::span<const double> grid) {
  const Scenario& sc = follower.scenario();
  const int s_count = sc.num_ris();
  SeVerification out;
  out.grid.assign(grid.begin(), grid.end());
  out.max_improvement.resize(static_cast<std::size_t>(s_count));
  out.best_deviation_price.resize(static_cast<std::size_t>(s_count));
  out.leader_accepted.resize(static_cast<std::size_t>(s_count));
  out.accepted = true;

  for (int s = 0; s < s_count; ++s) {
    const double base = report.ris_utilities[s];
    PriceVector trial = report.prices;
    trial.scheme = PricingScheme::non_uniform;
    double best_gain = -std::numeric_limits<double>::infinity();
    double best_price = report.prices[s];
    for (double q : grid) {
      trial.q[static_cast<std::size_t>(s)] = q;
      const double gain = revenue_of(s, follower.best_mask(trial), q, sc) - base;
      if (gain > best_gain) {
        best_gain = gain;
        best_price = q;
      }
    }
    out.max_improvement[s] = best_gain;
    out.best_deviation_price[s] = best_price;
    out.leader_accepted[s] = best_gain < 1e-3 * std::max(1.0, base);
    out.accepted = out.accepted && out.leader_accepted[s];
  }
  return out;
}

SeVerification verify_se(const EquilibriumReport& report, const ChannelSet& channels,
                         const Scenario& scenario, int deviation_grid_size) {
  FollowerResponseCache cache(channels, scenario);
  const std::vector<double> grid = price_grid(scenario.price_cap, deviation_grid_size);
  return verify_se(report, cache, grid);
}

EquilibriumReport random_pricing(FollowerResponseCache& follower, Rng& rng, PricingScheme scheme) {
  const Scenario& sc = follower.scenario();
  const int s_count = sc.num_ris();
  PriceVector prices;
  if (scheme == PricingScheme::uniform) {
    prices = PriceVector::uniform(s_count, rng.uniform(0.0, sc.price_cap));
  } else {
    prices = PriceVector::zeros(s_count);
    for (auto& q : prices.q) q = rng.uniform(0.0, sc.price_cap);
  }
  EquilibriumReport report = assemble_report(follower, prices, "random");
  report.rounds = 0;
  report.converged = true;
  report.price_trace = {prices.q};
  report.se = verify_se(report, follower, price_grid(sc.price_cap, sc.price_grid_points));
  return report;
}

EquilibriumReport random_pricing(const ChannelSet& channels, const Scenario& scenario, Rng& rng,
                                 PricingScheme scheme) {
  FollowerResponseCache cache(channels, scenario);
  return random_pricing(cache, rng, scheme);
}

}  // namespace rispricing
