#include "rispricing/channel.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rispricing/rng.hpp"

namespace rispricing {

double path_loss_db(double distance_m, double exponent, double ref_db) {
  const double d = std::max(distance_m, 1.0);
  return ref_db + 10.0 * exponent * std::log10(d);
}

double path_gain(double distance_m, double exponent, double ref_db) {
  return std::pow(10.0, -path_loss_db(distance_m, exponent, ref_db) / 10.0);
}

int ChannelSet::block_offset(int s) const {
  return std::accumulate(block_sizes.begin(), block_sizes.begin() + s, 0);
}

void ChannelSet::check() const {
  const int m = num_antennas();
  const int k = num_users();
  const int l = std::accumulate(block_sizes.begin(), block_sizes.end(), 0);
  if (bs_ris.rows() != l || bs_ris.cols() != m) {
    throw std::invalid_argument("ChannelSet: bs_ris must be L x M");
  }
  if (ris_user.rows() != l || ris_user.cols() != k) {
    throw std::invalid_argument("ChannelSet: ris_user must be L x K");
  }
  for (int b : block_sizes) {
    if (b < 1) throw std::invalid_argument("ChannelSet: empty RIS block");
  }
  if (!direct.allFinite() || !bs_ris.allFinite() || !ris_user.allFinite()) {
    throw std::invalid_argument("ChannelSet: non-finite entry");
  }
}

bool ChannelSet::operator==(const ChannelSet& other) const {
  return block_sizes == other.block_sizes && direct.rows() == other.direct.rows() &&
         direct.cols() == other.direct.cols() && bs_ris.rows() == other.bs_ris.rows() &&
         direct == other.direct && bs_ris == other.bs_ris && ris_user == other.ris_user;
}

ChannelSet generate_channels(const Scenario& scenario, const Geometry& geometry) {
  const int m = scenario.num_antennas;
  const int k_users = static_cast<int>(geometry.users.size());
  const int s_count = static_cast<int>(geometry.ris.size());
  const std::uint64_t seed = scenario.rng_seed;
  const double ref = scenario.pathloss_ref_db;

  ChannelSet ch;
  ch.block_sizes = scenario.elements_per_ris;
  const int l_total = scenario.total_elements();
  ch.direct.resize(m, k_users);
  ch.bs_ris.resize(l_total, m);
  ch.ris_user.resize(l_total, k_users);

  for (int k = 0; k < k_users; ++k) {
    const double amp = std::sqrt(
        path_gain(distance(geometry.bs, geometry.users[k]), scenario.exponent_direct, ref));
    Rng rng(seed, StreamClass::direct_link, {static_cast<std::uint64_t>(k)});
    for (int a = 0; a < m; ++a) ch.direct(a, k) = amp * rng.complex_gaussian();
  }

  for (int s = 0; s < s_count; ++s) {
    const int offset = scenario.element_offset(s);
    const int len = scenario.elements_per_ris[s];
    const double amp_bs = std::sqrt(
        path_gain(distance(geometry.bs, geometry.ris[s]), scenario.exponent_ris, ref));
    Rng rng_bs(seed, StreamClass::bs_ris_link, {static_cast<std::uint64_t>(s)});
    for (int l = 0; l < len; ++l) {
      for (int a = 0; a < m; ++a) ch.bs_ris(offset + l, a) = amp_bs * rng_bs.complex_gaussian();
    }
    for (int k = 0; k < k_users; ++k) {
      const double amp_u = std::sqrt(
          path_gain(distance(geometry.ris[s], geometry.users[k]), scenario.exponent_ris, ref));
      Rng rng_u(seed, StreamClass::ris_user_link,
                {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k)});
      for (int l = 0; l < len; ++l) ch.ris_user(offset + l, k) = amp_u * rng_u.complex_gaussian();
    }
  }
  return ch;
}

}  // namespace rispricing
