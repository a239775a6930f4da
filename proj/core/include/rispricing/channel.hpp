#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "rispricing/scenario.hpp"

namespace rispricing {

/// Large-scale attenuation in dB: ref_db + 10 * exponent * log10(d), with d
/// clamped below at the 1 m reference distance.
double path_loss_db(double distance_m, double exponent, double ref_db);

/// Linear power gain corresponding to path_loss_db.
double path_gain(double distance_m, double exponent, double ref_db);

/// One realization of every channel in the network.
///
/// Stored as matrices; column k of `direct` is h_{d,k} (BS -> user k),
/// `bs_ris` is the stacked L x M BS -> RIS-element matrix with rows grouped
/// per RIS in index order, and column k of `ris_user` is g_k (all RIS
/// elements -> user k).
struct ChannelSet {
  static constexpr int kDumpVersion = 1;

  Eigen::MatrixXcd direct;    // M x K
  Eigen::MatrixXcd bs_ris;    // L x M
  Eigen::MatrixXcd ris_user;  // L x K
  std::vector<int> block_sizes;

  int num_antennas() const { return static_cast<int>(direct.rows()); }
  int num_users() const { return static_cast<int>(direct.cols()); }
  int num_elements() const { return static_cast<int>(bs_ris.rows()); }
  int num_ris() const { return static_cast<int>(block_sizes.size()); }
  int block_offset(int s) const;

  Eigen::VectorXcd h_direct(int k) const { return direct.col(k); }
  Eigen::VectorXcd g_ris_user(int k) const { return ris_user.col(k); }

  /// Throws std::invalid_argument on inconsistent dimensions or non-finite
  /// entries.
  void check() const;

  bool operator==(const ChannelSet& other) const;
};

/// Path loss times i.i.d. CN(0, 1) fading. The fading of every link is drawn
/// from a sub-stream keyed by (scenario.rng_seed, link class, endpoint
/// indices), so moving nodes changes only the large-scale part.
ChannelSet generate_channels(const Scenario& scenario, const Geometry& geometry);

/// Versioned JSON dump; load_channels(dump_channels(c)) == c bit-exactly.
std::string dump_channels(const ChannelSet& channels);
ChannelSet load_channels(std::string_view text);

}  // namespace rispricing
