#include "rispricing/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "rispricing/rng.hpp"

namespace rispricing {

namespace {

/// Sum rate in nats and its Wirtinger gradients with respect to conj(W) and
/// conj(phi_E).
struct RateModel {
  const ChannelSet& channels;
  std::vector<int> elements;
  Eigen::MatrixXcd h_e;  // |E| x M
  Eigen::MatrixXcd g_e;  // |E| x K
  double noise;

  RateModel(const ChannelSet& ch, PurchaseMask mask, double noise_power)
      : channels(ch), noise(noise_power) {
    int offset = 0;
    for (int s = 0; s < ch.num_ris(); ++s) {
      if ((mask >> s) & 1U) {
        for (int l = 0; l < ch.block_sizes[s]; ++l) elements.push_back(offset + l);
      }
      offset += ch.block_sizes[s];
    }
    const auto n = static_cast<Eigen::Index>(elements.size());
    h_e.resize(n, ch.num_antennas());
    g_e.resize(n, ch.num_users());
    for (Eigen::Index l = 0; l < n; ++l) {
      h_e.row(l) = ch.bs_ris.row(elements[l]);
      g_e.row(l) = ch.ris_user.row(elements[l]);
    }
  }

  Eigen::MatrixXcd effective(const Eigen::VectorXcd& phi) const {
    return channels.direct.adjoint() + g_e.adjoint() * phi.asDiagonal() * h_e;
  }

  double rate(const Eigen::MatrixXcd& w, const Eigen::VectorXcd& phi) const {
    const Eigen::MatrixXd p = (effective(phi) * w).cwiseAbs2();
    double r = 0.0;
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
      const double total = p.row(k).sum() + noise;
      r += std::log(total) - std::log(total - p(k, k));
    }
    return r;
  }

  void gradients(const Eigen::MatrixXcd& w, const Eigen::VectorXcd& phi, Eigen::MatrixXcd& grad_w,
                 Eigen::VectorXcd& grad_phi) const {
    const Eigen::MatrixXcd heff = effective(phi);
    const Eigen::MatrixXcd y = heff * w;
    const Eigen::Index k_users = y.rows();
    Eigen::MatrixXcd coef(k_users, k_users);
    for (Eigen::Index k = 0; k < k_users; ++k) {
      const double total = y.row(k).squaredNorm() + noise;
      const double interference = total - std::norm(y(k, k));
      for (Eigen::Index i = 0; i < k_users; ++i) {
        coef(k, i) = y(k, i) * (1.0 / total - (i == k ? 0.0 : 1.0 / interference));
      }
    }
    grad_w = heff.adjoint() * coef;
    if (elements.empty()) {
      grad_phi.resize(0);
      return;
    }
    const Eigen::MatrixXcd z = h_e * w;                       // (l, i)
    const Eigen::MatrixXcd zc = z.conjugate() * coef.transpose();  // (l, k)
    grad_phi = (g_e.array() * zc.array()).rowwise().sum().matrix();
  }
};

Eigen::MatrixXcd project_power(Eigen::MatrixXcd w, double p_max) {
  const double p = w.squaredNorm();
  if (p > p_max && p > 0.0) w *= std::sqrt(p_max / p);
  return w;
}

Eigen::VectorXcd normalize(const Eigen::VectorXcd& x, const Eigen::VectorXcd& fallback) {
  Eigen::VectorXcd out(x.size());
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    const double r = std::abs(x(l));
    out(l) = r > 0.0 ? x(l) / r : fallback(l);
  }
  return out;
}

/// Block projected gradient ascent with adaptive (grow / halve) steps;
/// only improving steps are accepted.
double ascend(const RateModel& model, Eigen::MatrixXcd w, Eigen::VectorXcd phi, double p_max,
              int max_iters) {
  double f = model.rate(w, phi);
  double step_w = -1.0;
  double step_phi = -1.0;
  int quiet = 0;
  Eigen::MatrixXcd gw;
  Eigen::VectorXcd gp;

  for (int it = 0; it < max_iters && quiet < 8; ++it) {
    const double start = f;
    model.gradients(w, phi, gw, gp);
    {
      const double gnorm = gw.norm();
      if (gnorm > 0.0) {
        if (step_w < 0.0) step_w = 0.1 * std::sqrt(p_max) / gnorm;
        for (int bt = 0; bt < 60; ++bt) {
          const Eigen::MatrixXcd cand = project_power(w + step_w * gw, p_max);
          const double fc = model.rate(cand, phi);
          if (fc > f) {
            w = cand;
            f = fc;
            step_w *= 1.5;
            break;
          }
          step_w *= 0.5;
        }
      }
    }
    if (gp.size() > 0) {
      model.gradients(w, phi, gw, gp);
      const double gmax = gp.cwiseAbs().maxCoeff();
      if (gmax > 0.0) {
        if (step_phi < 0.0) step_phi = 0.1 / gmax;
        for (int bt = 0; bt < 60; ++bt) {
          const Eigen::VectorXcd cand = normalize(phi + step_phi * gp, phi);
          const double fc = model.rate(w, cand);
          if (fc > f) {
            phi = cand;
            f = fc;
            step_phi *= 1.5;
            break;
          }
          step_phi *= 0.5;
        }
      }
    }
    quiet = (f - start <= 1e-15 * std::max(1.0, std::abs(f))) ? quiet + 1 : 0;
  }
  return f;
}

}  // namespace

double oracle_best_rate(const ChannelSet& channels, PurchaseMask mask, const Scenario& scenario,
                        const OracleBudget& budget) {
  const RateModel model(channels, mask, scenario.noise_power_w());
  const double p_max = scenario.power_budget_w();
  const Eigen::Index m = channels.num_antennas();
  const Eigen::Index k_users = channels.num_users();
  const auto n = static_cast<Eigen::Index>(model.elements.size());

  if (!(p_max > 0.0)) return 0.0;

  double best = -std::numeric_limits<double>::infinity();
  for (int r = 0; r <= budget.restarts; ++r) {
    Eigen::MatrixXcd w(m, k_users);
    Eigen::VectorXcd phi(n);
    if (r == 0) {
      // Zero phases, matched filter at equal power.
      phi.setOnes();
      const Eigen::MatrixXcd heff = model.effective(phi);
      for (Eigen::Index k = 0; k < k_users; ++k) {
        const double nrm = heff.row(k).norm();
        w.col(k) = nrm > 0.0 ? Eigen::VectorXcd(heff.row(k).adjoint() / nrm)
                             : Eigen::VectorXcd::Zero(m);
      }
    } else {
      Rng rng(budget.seed, StreamClass::oracle, {mask, static_cast<std::uint64_t>(r)});
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.complex_gaussian();
      for (Eigen::Index l = 0; l < n; ++l) {
        phi(l) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
      }
    }
    const double nrm2 = w.squaredNorm();
    if (nrm2 > 0.0) w *= std::sqrt(p_max / nrm2);
    best = std::max(best, ascend(model, w, phi, p_max, budget.max_iters));
  }
  return scenario.log_base == LogBase::natural ? best : best / std::numbers::ln2;
}

OracleFollowerResult oracle_follower(const ChannelSet& channels, const PriceVector& prices,
                                     const Scenario& scenario, const OracleBudget& budget) {
  if (channels.num_antennas() > 2 || channels.num_users() > 2 || channels.num_elements() > 4) {
    throw OracleSizeError("oracle_follower is limited to M <= 2, K <= 2, L <= 4");
  }
  if (channels.num_ris() > budget.enumeration_cap || budget.enumeration_cap > 12) {
    throw OracleSizeError("oracle_follower enumerates at most 2^12 purchase sets");
  }
  OracleFollowerResult out;
  const PurchaseMask count = PurchaseMask{1} << channels.num_ris();
  out.rate_by_mask.resize(count);
  out.utility = -std::numeric_limits<double>::infinity();
  for (PurchaseMask mask = 0; mask < count; ++mask) {
    const double rate = oracle_best_rate(channels, mask, scenario, budget);
    out.rate_by_mask[mask] = rate;
    const PhaseConfig pc = PhaseConfig::with_mask(channels, mask);
    const double u = rate - purchase_cost(prices, pc.purchased, scenario);
    const double tol = 1e-12 * std::max(1.0, std::abs(u));
    if (u > out.utility + tol ||
        (std::abs(u - out.utility) <= tol && prefer_purchase(mask, out.mask))) {
      out.utility = u;
      out.mask = mask;
    }
  }
  return out;
}

OracleLeaderResult oracle_leader_grid(FollowerResponseCache& follower,
                                      const std::vector<double>& grid) {
  const Scenario& sc = follower.scenario();
  OracleLeaderResult best{0.0, -std::numeric_limits<double>::infinity()};
  for (double q : grid) {
    const PurchaseMask mask = follower.best_mask(PriceVector::uniform(sc.num_ris(), q));
    double revenue = 0.0;
    for (int s = 0; s < sc.num_ris(); ++s) {
      if ((mask >> s) & 1U) revenue += q * sc.elements_per_ris[s];
    }
    if (revenue > best.revenue) best = {q, revenue};
  }
  return best;
}

OracleLeaderResult oracle_leader_grid(const ChannelSet& channels, const Scenario& scenario,
                                      const std::vector<double>& grid) {
  FollowerResponseCache cache(channels, scenario);
  return oracle_leader_grid(cache, grid);
}

TinyInstance make_tiny_instance(std::uint64_t seed) {
  Rng rng(seed, StreamClass::oracle, {0xF1A7ULL});
  Scenario sc;
  sc.num_antennas = 2;
  sc.num_users = 2;
  const int s_count = 1 + static_cast<int>(seed % 3);
  sc.elements_per_ris = s_count == 1 ? std::vector<int>{4}
                        : s_count == 2 ? std::vector<int>{2, 2}
                                       : std::vector<int>{1, 1, 2};
  sc.power_budget_dbm = 20.0;
  sc.user_cluster_center = {60.0, 0.0};
  sc.user_cluster_radius = 5.0;
  sc.ris_positions.clear();
  for (int s = 0; s < s_count; ++s) {
    sc.ris_positions.push_back({rng.uniform(50.0, 70.0), rng.uniform(-12.0, 12.0)});
  }
  sc.price_cap = 0.5;
  sc.rng_seed = seed;
  sc.inner_tolerance = 1e-9;
  sc.max_inner_iters = 2000;
  validate(sc);

  TinyInstance inst{sc, generate_channels(sc, build_geometry(sc)), PriceVector::zeros(s_count)};
  for (auto& q : inst.prices.q) q = rng.uniform(0.0, 0.3);
  return inst;
}

}  // namespace rispricing
