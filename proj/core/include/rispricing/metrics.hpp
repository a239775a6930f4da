#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rispricing/channel.hpp"
#include "rispricing/scenario.hpp"

namespace rispricing {

enum class PricingScheme { uniform, non_uniform };

/// Leader strategy: one per-element use price per RIS.
struct PriceVector {
  std::vector<double> q;
  PricingScheme scheme = PricingScheme::non_uniform;

  static PriceVector uniform(int num_ris, double price) {
    return {std::vector<double>(static_cast<std::size_t>(num_ris), price),
            PricingScheme::uniform};
  }
  static PriceVector zeros(int num_ris) {
    return {std::vector<double>(static_cast<std::size_t>(num_ris), 0.0),
            PricingScheme::non_uniform};
  }
  int size() const { return static_cast<int>(q.size()); }
  double operator[](int s) const { return q[static_cast<std::size_t>(s)]; }

  bool operator==(const PriceVector&) const = default;
};

/// Throws std::invalid_argument if a price is outside [0, cap] or a uniform
/// vector is not constant.
void check_prices(const PriceVector& prices, double price_cap);

/// Purchase set as a bit mask: bit s set <=> RIS s is bought.
using PurchaseMask = std::uint64_t;

/// Follower's passive strategy: purchase indicators plus one reflection
/// coefficient per element (stacked in RIS order). Elements of idle RISs keep
/// their stored coefficient but reflect nothing.
struct PhaseConfig {
  std::vector<bool> purchased;
  Eigen::VectorXcd phi;

  /// All RISs idle (or all bought), zero phase everywhere.
  static PhaseConfig idle(const ChannelSet& channels);
  static PhaseConfig with_mask(const ChannelSet& channels, PurchaseMask mask);

  PurchaseMask mask() const;
  int num_purchased() const;
  /// Diagonal of Phi with idle elements zeroed.
  Eigen::VectorXcd active_diagonal(const ChannelSet& channels) const;
};

/// Transmit beamformers; column k is w_k.
struct Beamformers {
  Eigen::MatrixXcd w;  // M x K

  double power() const { return w.squaredNorm(); }
};

/// h_eff,k = h_{d,k}^H + g_k^H Phi H as a 1 x M row.
Eigen::RowVectorXcd effective_channel(const ChannelSet& channels, const PhaseConfig& phases,
                                      int k);
/// All effective channels stacked as a K x M matrix (row k = h_eff,k).
Eigen::MatrixXcd effective_channels(const ChannelSet& channels, const PhaseConfig& phases);

/// Per-user SINR from a K x M effective channel matrix.
Eigen::VectorXd sinrs(const Eigen::MatrixXcd& effective, const Eigen::MatrixXcd& w,
                      double noise_power);

double sinr(const ChannelSet& channels, const PhaseConfig& phases,
            const Beamformers& beamformers, int k, double noise_power);

/// log(1 + x) in the scenario's base.
double log_rate(double x, LogBase base);

/// Sum over purchased RISs of delta * q_s * L_s.
double purchase_cost(const PriceVector& prices, const std::vector<bool>& purchased,
                     const Scenario& scenario);

/// BS utility: sum_k log(1 + gamma_k) - delta * sum_s psi_s q_s L_s.
double bs_utility(const ChannelSet& channels, const PhaseConfig& phases,
                  const Beamformers& beamformers, const PriceVector& prices,
                  const Scenario& scenario);

/// RIS holder utility: psi_s * q_s * L_s (an unsold RIS earns nothing).
double ris_utility(const PriceVector& prices, const PhaseConfig& phases, int s,
                   const Scenario& scenario);

}  // namespace rispricing
