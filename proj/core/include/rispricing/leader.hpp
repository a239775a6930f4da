#pragma once

#include <span>
#include <string>
#include <vector>

#include "rispricing/follower.hpp"
#include "rispricing/metrics.hpp"
#include "rispricing/rng.hpp"

namespace rispricing {

/// Result of the unilateral-deviation scan.
struct SeVerification {
  std::vector<double> grid;
  /// Per leader: max over the grid of V_s(q_s', q_-s) - V_s(q*).
  std::vector<double> max_improvement;
  std::vector<double> best_deviation_price;
  /// Per leader: improvement < 1e-3 * max(1, V_s).
  std::vector<bool> leader_accepted;
  bool accepted = false;
};

struct EquilibriumReport {
  static constexpr int kSchemaVersion = 1;

  std::string method;  // "stackelberg" or "random"
  PricingScheme scheme = PricingScheme::non_uniform;
  PriceVector prices;
  FollowerState follower;
  std::vector<double> ris_utilities;
  double bs_utility = 0.0;
  int rounds = 0;
  bool converged = false;
  std::vector<std::vector<double>> price_trace;
  SeVerification se;
};

/// Candidate prices on [0, q_max]: a linear half and a geometric half
/// (down to 1e-4 q_max), sorted and deduplicated; always contains 0 and q_max.
std::vector<double> price_grid(double q_max, int points);

/// Evenly spaced grid with `points` values on [0, q_max].
std::vector<double> linear_grid(double q_max, int points);

/// Best price for RIS `s` (0-based) against the follower's purchase
/// response, others' prices held at `current`: grid scan followed by a
/// golden-section refinement inside the best grid cell. Ties go to the lower
/// price.
double price_best_response(int s, const PriceVector& current, FollowerResponseCache& follower);
double price_best_response(int s, const PriceVector& current, const ChannelSet& channels,
                           const Scenario& scenario);

/// Backward induction. Non-uniform: round-robin best responses until a
/// round moves no price by outer_tolerance * price_cap or more. Uniform: one
/// shared price maximizing total revenue. Never throws on non-convergence;
/// the report carries converged = false and the full price trace.
EquilibriumReport stackelberg_solve(FollowerResponseCache& follower, PricingScheme scheme);
EquilibriumReport stackelberg_solve(const ChannelSet& channels, const Scenario& scenario,
                                    PricingScheme scheme);

/// Unilateral price deviations of each leader over `grid`, follower re-solved
/// for every candidate.
SeVerification verify_se(const EquilibriumReport& report, FollowerResponseCache& follower,
                         std::span<const double> grid);
SeVerification verify_se(const EquilibriumReport& report, const ChannelSet& channels,
                         const Scenario& scenario, int deviation_grid_size);

/// Prices drawn i.i.d. uniform on [0, q_max] (one shared draw for the uniform
/// scheme); the follower best-responds once.
EquilibriumReport random_pricing(FollowerResponseCache& follower, Rng& rng,
                                 PricingScheme scheme = PricingScheme::non_uniform);
EquilibriumReport random_pricing(const ChannelSet& channels, const Scenario& scenario, Rng& rng,
                                 PricingScheme scheme = PricingScheme::non_uniform);

/// Evaluates the follower at `prices` and fills utilities from network
/// metrics. Used by every solver so reports never carry stale values.
EquilibriumReport assemble_report(FollowerResponseCache& follower, const PriceVector& prices,
                                  std::string method);

}  // namespace rispricing
