#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "rispricing/channel.hpp"
#include "rispricing/metrics.hpp"
#include "rispricing/scenario.hpp"

namespace rispricing {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row of the inner-loop trace.
struct IterationRecord {
  int iter = 0;
  double surrogate = 0.0;
  double power_used = 0.0;
  double max_alpha_gap = 0.0;  // max_k |alpha_k - gamma_k| after the iteration
};

/// BS strategy plus every auxiliary variable of the fractional-programming
/// reformulation.
///
///   alpha  - SINR surrogates of the Lagrangian dual transform
///   beta   - quadratic-transform variables of the beamformer subproblem
///   theta  - quadratic-transform variables of the phase subproblem
///   lambda0 - power-budget multiplier
///   reflection_multipliers - mean unit-modulus multiplier per RIS (diagnostic)
struct FollowerState {
  Beamformers beamformers;
  PhaseConfig phases;

  Eigen::VectorXd alpha;
  Eigen::VectorXcd beta;
  Eigen::VectorXcd theta;
  double lambda0 = 0.0;
  Eigen::VectorXd reflection_multipliers;

  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> trace;

  /// Sum-rate part of the BS utility at the stored (w, Phi).
  double rate = 0.0;
  /// bs_utility at the stored strategy for the prices it was last scored at.
  double utility = 0.0;

  std::vector<double> surrogate_trace() const;
};

/// Lagrangian-dual-transform surrogate of the BS utility:
///   sum_k [log(1+a_k) - a_k + (1+a_k) g_k / (1+g_k)] - cost,
/// with gamma evaluated at the state's (w, Phi). Equals bs_utility at a = gamma.
double surrogate_objective(const FollowerState& state, const ChannelSet& channels,
                           const PriceVector& prices, const Scenario& scenario);

/// Matched filter to each effective channel with equal power split, alpha at
/// the resulting SINRs.
FollowerState initial_state(const ChannelSet& channels, const PhaseConfig& phases,
                            const Scenario& scenario);

/// alpha <- gamma at the current (w, Phi).
void update_alpha(FollowerState& state, const ChannelSet& channels, const Scenario& scenario);

/// Beamformer step: beta at its quadratic-transform optimum, then the
/// regularized closed form for w with lambda0 bisected against the power
/// budget. Throws SolverError if the bisection fails to bracket.
void update_beamformers(FollowerState& state, const ChannelSet& channels,
                        const Scenario& scenario);

/// Phase step over purchased elements: theta at its quadratic-transform
/// optimum, then the unit-modulus projection of the unconstrained maximizer
/// or, when that does not improve the quadratic surrogate, a
/// majorization-minorization step that is guaranteed not to.
void update_phases(FollowerState& state, const ChannelSet& channels, const Scenario& scenario);

/// Alternating optimization for a fixed purchase set. `warm_start`, when
/// given, seeds w and the phases of RISs it had purchased.
FollowerState solve_p1(const ChannelSet& channels, const PriceVector& prices,
                       const std::vector<bool>& purchased, const Scenario& scenario,
                       const FollowerState* warm_start = nullptr);

/// Best-response solves for one channel realization, keyed by purchase set.
///
/// The rate part of a P1 solution does not depend on prices (the cost is a
/// constant once the purchase set is fixed), so each purchase set is solved
/// at most once and every price query is answered from the cache. Safe to
/// share between threads.
class FollowerResponseCache {
 public:
  FollowerResponseCache(const ChannelSet& channels, const Scenario& scenario);

  const ChannelSet& channels() const { return channels_; }
  const Scenario& scenario() const { return scenario_; }

  /// P1 solution for `mask` (scored at zero prices).
  const FollowerState& solve(PurchaseMask mask);

  /// Best purchase set for `prices`, with the state re-scored at them.
  /// Exhaustive over all subsets when S <= exhaustive_cap, else greedy
  /// backward elimination from the full set. Ties go to the set with more
  /// RISs bought, then to the lexicographically larger indicator vector.
  FollowerState best_response(const PriceVector& prices);
  FollowerState best_response(const PriceVector& prices, bool exhaustive);

  /// Purchase set chosen by best_response, without copying the state.
  PurchaseMask best_mask(const PriceVector& prices);
  PurchaseMask best_mask(const PriceVector& prices, bool exhaustive);

  std::size_t solved_count() const;

 private:
  double score(PurchaseMask mask, const PriceVector& prices);

  ChannelSet channels_;
  Scenario scenario_;
  mutable std::mutex mutex_;
  std::map<PurchaseMask, std::unique_ptr<FollowerState>> solved_;
};

/// Follower best response including the purchase decision.
FollowerState purchase_decision(const ChannelSet& channels, const PriceVector& prices,
                                const Scenario& scenario);

/// True when `a` is preferred over `b` by the purchase tie-break.
bool prefer_purchase(PurchaseMask a, PurchaseMask b);

}  // namespace rispricing
