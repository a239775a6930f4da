#pragma once

#include <string>
#include <string_view>

#include "rispricing/follower.hpp"
#include "rispricing/leader.hpp"

namespace rispricing {

/// Report document (JSON, `schema_version` 1). Holds prices, the follower's
/// final strategy (w, phi, purchase set, auxiliaries), utilities, the price
/// trace and the SE check. Doubles are written round-trip exact.
std::string report_to_json(const EquilibriumReport& report);
EquilibriumReport report_from_json(std::string_view text);

/// One CSV line per inner iteration: iter,surrogate,power_used,max_alpha_gap.
std::string trace_to_csv(const FollowerState& state);

/// Re-evaluates the BS utility of a (possibly deserialized) report from
/// network metrics alone.
double audit_bs_utility(const EquilibriumReport& report, const ChannelSet& channels,
                        const Scenario& scenario);

std::string scheme_name(PricingScheme scheme);
PricingScheme parse_pricing_scheme(std::string_view name);

}  // namespace rispricing
