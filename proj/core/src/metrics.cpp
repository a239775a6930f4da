#include "rispricing/metrics.hpp"

#include <cmath>
#include <numbers>

namespace rispricing {

void check_prices(const PriceVector& prices, double price_cap) {
  for (double q : prices.q) {
    if (!(q >= 0.0 && q <= price_cap)) {
      throw std::invalid_argument("price " + std::to_string(q) + " outside [0, " +
                                  std::to_string(price_cap) + "]");
    }
  }
  if (prices.scheme == PricingScheme::uniform) {
    for (double q : prices.q) {
      if (q != prices.q.front()) throw std::invalid_argument("uniform prices differ");
    }
  }
}

PhaseConfig PhaseConfig::idle(const ChannelSet& channels) {
  return with_mask(channels, 0);
}

PhaseConfig PhaseConfig::with_mask(const ChannelSet& channels, PurchaseMask mask) {
  PhaseConfig pc;
  pc.purchased.resize(static_cast<std::size_t>(channels.num_ris()));
  for (int s = 0; s < channels.num_ris(); ++s) pc.purchased[s] = ((mask >> s) & 1U) != 0;
  pc.phi = Eigen::VectorXcd::Ones(channels.num_elements());
  return pc;
}

PurchaseMask PhaseConfig::mask() const {
  PurchaseMask m = 0;
  for (std::size_t s = 0; s < purchased.size(); ++s) {
    if (purchased[s]) m |= PurchaseMask{1} << s;
  }
  return m;
}

int PhaseConfig::num_purchased() const {
  int n = 0;
  for (bool b : purchased) n += b ? 1 : 0;
  return n;
}

Eigen::VectorXcd PhaseConfig::active_diagonal(const ChannelSet& channels) const {
  if (static_cast<int>(purchased.size()) != channels.num_ris() ||
      phi.size() != channels.num_elements()) {
    throw std::invalid_argument("PhaseConfig does not match the channel dimensions");
  }
  Eigen::VectorXcd d = Eigen::VectorXcd::Zero(channels.num_elements());
  int offset = 0;
  for (int s = 0; s < channels.num_ris(); ++s) {
    const int len = channels.block_sizes[s];
    if (purchased[s]) d.segment(offset, len) = phi.segment(offset, len);
    offset += len;
  }
  return d;
}

Eigen::MatrixXcd effective_channels(const ChannelSet& channels, const PhaseConfig& phases) {
  const Eigen::VectorXcd d = phases.active_diagonal(channels);
  // Rows: h_d^H + g^H diag(d) H.
  return channels.direct.adjoint() +
         channels.ris_user.adjoint() * d.asDiagonal() * channels.bs_ris;
}

Eigen::RowVectorXcd effective_channel(const ChannelSet& channels, const PhaseConfig& phases,
                                      int k) {
  if (k < 0 || k >= channels.num_users()) throw std::invalid_argument("user index out of range");
  const Eigen::VectorXcd d = phases.active_diagonal(channels);
  return channels.direct.col(k).adjoint() +
         channels.ris_user.col(k).adjoint() * d.asDiagonal() * channels.bs_ris;
}

Eigen::VectorXd sinrs(const Eigen::MatrixXcd& effective, const Eigen::MatrixXcd& w,
                      double noise_power) {
  const Eigen::MatrixXd gains = (effective * w).cwiseAbs2();  // (k, i) = |h_k w_i|^2
  const Eigen::Index k_users = gains.rows();
  Eigen::VectorXd out(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const double signal = gains(k, k);
    const double interference = gains.row(k).sum() - signal;
    out(k) = signal / (interference + noise_power);
  }
  return out;
}

double sinr(const ChannelSet& channels, const PhaseConfig& phases,
            const Beamformers& beamformers, int k, double noise_power) {
  const Eigen::RowVectorXcd h = effective_channel(channels, phases, k);
  const Eigen::RowVectorXd gains = (h * beamformers.w).cwiseAbs2();
  const double signal = gains(k);
  return signal / (gains.sum() - signal + noise_power);
}

double log_rate(double x, LogBase base) {
  const double r = std::log1p(x);
  return base == LogBase::natural ? r : r / std::numbers::ln2;
}

double purchase_cost(const PriceVector& prices, const std::vector<bool>& purchased,
                     const Scenario& scenario) {
  double cost = 0.0;
  for (std::size_t s = 0; s < purchased.size(); ++s) {
    if (purchased[s]) cost += prices.q[s] * scenario.elements_per_ris[s];
  }
  return scenario.cost_weight * cost;
}

double bs_utility(const ChannelSet& channels, const PhaseConfig& phases,
                  const Beamformers& beamformers, const PriceVector& prices,
                  const Scenario& scenario) {
  const Eigen::VectorXd g =
      sinrs(effective_channels(channels, phases), beamformers.w, scenario.noise_power_w());
  double rate = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) rate += log_rate(g(k), scenario.log_base);
  return rate - purchase_cost(prices, phases.purchased, scenario);
}

double ris_utility(const PriceVector& prices, const PhaseConfig& phases, int s,
                   const Scenario& scenario) {
  if (!phases.purchased[static_cast<std::size_t>(s)]) return 0.0;
  return prices[s] * scenario.elements_per_ris[static_cast<std::size_t>(s)];
}

}  // namespace rispricing
