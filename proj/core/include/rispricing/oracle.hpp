#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rispricing/channel.hpp"
#include "rispricing/follower.hpp"
#include "rispricing/metrics.hpp"
#include "rispricing/scenario.hpp"

namespace rispricing {

/// Brute-force validators. Deliberately share nothing with the FP solver
/// beyond the network-metric definitions.

struct OracleBudget {
  int restarts = 8;
  int max_iters = 3000;
  std::uint64_t seed = 0;
  int enumeration_cap = 12;
  int price_grid_points = 512;
};

class OracleSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OracleFollowerResult {
  double utility = 0.0;
  PurchaseMask mask = 0;
  /// Best sum rate found for every purchase set, indexed by mask.
  std::vector<double> rate_by_mask;
};

/// Exhaustive purchase sets x multi-start projected gradient ascent on
/// (w, phi). Refuses instances beyond M <= 2, K <= 2, L <= 4.
OracleFollowerResult oracle_follower(const ChannelSet& channels, const PriceVector& prices,
                                     const Scenario& scenario, const OracleBudget& budget);

/// Best sum rate for one purchase set by multi-start projected gradient
/// ascent. No size limit; cost grows with restarts * max_iters.
double oracle_best_rate(const ChannelSet& channels, PurchaseMask mask, const Scenario& scenario,
                        const OracleBudget& budget);

struct OracleLeaderResult {
  double price = 0.0;
  double revenue = 0.0;
};

/// Dense scan of a uniform price over `grid` with a full follower re-solve at
/// each point. Ties go to the lower price.
OracleLeaderResult oracle_leader_grid(FollowerResponseCache& follower,
                                      const std::vector<double>& grid);
OracleLeaderResult oracle_leader_grid(const ChannelSet& channels, const Scenario& scenario,
                                      const std::vector<double>& grid);

/// Seeded tiny instance used by the oracle certification runs:
/// M = K = 2, S in {1, 2, 3}, L <= 4, RISs near the users.
struct TinyInstance {
  Scenario scenario;
  ChannelSet channels;
  PriceVector prices;
};
TinyInstance make_tiny_instance(std::uint64_t seed);

}  // namespace rispricing
