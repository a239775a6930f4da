#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "rispricing/channel.hpp"
#include "rispricing/rng.hpp"
#include "rispricing/scenario.hpp"

namespace testsupport {

using cd = std::complex<double>;

/// Scenario whose counts match a hand-built channel set. Positions are
/// spread out so the instance validates; they do not enter the channels.
inline rispricing::Scenario scenario_for(int m, int k, std::vector<int> blocks) {
  rispricing::Scenario sc;
  sc.num_antennas = m;
  sc.num_users = k;
  sc.ris_positions.clear();
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    sc.ris_positions.push_back({30.0 + 20.0 * static_cast<double>(s), 5.0});
  }
  sc.elements_per_ris = std::move(blocks);
  return sc;
}

inline rispricing::ChannelSet zero_channels(int m, int k, std::vector<int> blocks) {
  rispricing::ChannelSet ch;
  int l = 0;
  for (int b : blocks) l += b;
  ch.direct = Eigen::MatrixXcd::Zero(m, k);
  ch.bs_ris = Eigen::MatrixXcd::Zero(l, m);
  ch.ris_user = Eigen::MatrixXcd::Zero(l, k);
  ch.block_sizes = std::move(blocks);
  return ch;
}

/// Unit-variance Gaussian channels scaled so that the SNR is moderate
/// at the default noise floor.
inline rispricing::ChannelSet random_channels(std::uint64_t seed, int m, int k,
                                              std::vector<int> blocks, double direct_gain = 1e-10,
                                              double cascade_gain = 1e-6) {
  rispricing::ChannelSet ch = zero_channels(m, k, std::move(blocks));
  rispricing::Rng rng(seed, rispricing::StreamClass::oracle, {0x7e57});
  auto fill = [&](Eigen::MatrixXcd& x, double gain) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = std::sqrt(gain) * rng.complex_gaussian();
    }
  };
  fill(ch.direct, direct_gain);
  fill(ch.bs_ris, cascade_gain);
  fill(ch.ris_user, cascade_gain);
  return ch;
}

}  // namespace testsupport
