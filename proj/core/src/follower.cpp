#include "rispricing/follower.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "rispricing/rng.hpp"

namespace rispricing {

namespace {

constexpr int kMaxBisectionSteps = 400;
constexpr double kTieTolerance = 1e-12;

double rate_scale(LogBase base) {
  return base == LogBase::natural ? 1.0 : 1.0 / std::numbers::ln2;
}

std::vector<int> purchased_elements(const ChannelSet& channels, const std::vector<bool>& purchased) {
  std::vector<int> idx;
  int offset = 0;
  for (int s = 0; s < channels.num_ris(); ++s) {
    const int len = channels.block_sizes[s];
    if (purchased[s]) {
      for (int l = 0; l < len; ++l) idx.push_back(offset + l);
    }
    offset += len;
  }
  return idx;
}

/// Per-user received power |h_k w_i|^2 summed over i, plus noise.
Eigen::VectorXd total_received(const Eigen::MatrixXcd& y, double noise) {
  return (y.cwiseAbs2().rowwise().sum().array() + noise).matrix();
}

/// Quadratic-transform phase subproblem over a set of variable elements E:
///   maximize -||B phi_E||^2 + 2 Re{v^H phi_E}
/// where rows of B are |theta_k| a_{ki}^T and a_{ki,l} = conj(g_{l,k}) (H w_i)_l.
struct PhaseProblem {
  Eigen::VectorXcd theta;
  Eigen::MatrixXcd b;  // K^2 x |E|
  Eigen::VectorXcd v;  // |E|

  double value(const Eigen::VectorXcd& phi) const {
    return -(b * phi).squaredNorm() + 2.0 * v.dot(phi).real();
  }
};

/// `fixed` is the K x M part of the effective channel that does not depend on
/// phi_E; `phi_e` the current values of the variable elements.
PhaseProblem build_phase_problem(const FollowerState& state, const ChannelSet& channels,
                                 const std::vector<int>& elements,
                                 const Eigen::MatrixXcd& fixed, const Eigen::VectorXcd& phi_e,
                                 double noise) {
  const Eigen::MatrixXcd& w = state.beamformers.w;
  const Eigen::Index k_users = w.cols();
  const Eigen::Index n = static_cast<Eigen::Index>(elements.size());

  Eigen::MatrixXcd h_e(n, channels.num_antennas());  // rows of H for E
  Eigen::MatrixXcd g_e(n, k_users);                  // rows of [g_1 .. g_K] for E
  for (Eigen::Index l = 0; l < n; ++l) {
    h_e.row(l) = channels.bs_ris.row(elements[static_cast<std::size_t>(l)]);
    g_e.row(l) = channels.ris_user.row(elements[static_cast<std::size_t>(l)]);
  }

  const Eigen::MatrixXcd c = fixed * w;     // (k, i): fixed part of h_k w_i
  const Eigen::MatrixXcd z = h_e * w;       // (l, i): (H w_i)_l
  const Eigen::MatrixXcd g_conj = g_e.conjugate();

  // y = c + sum_l a_{ki,l} phi_l
  Eigen::MatrixXcd y = c;
  for (Eigen::Index k = 0; k < k_users; ++k) {
    for (Eigen::Index i = 0; i < k_users; ++i) {
      y(k, i) += (g_conj.col(k).array() * z.col(i).array() * phi_e.array()).sum();
    }
  }
  const Eigen::VectorXd total = total_received(y, noise);

  PhaseProblem pp;
  pp.theta.resize(k_users);
  pp.b.resize(k_users * k_users, n);
  pp.v = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const double weight = std::sqrt(1.0 + state.alpha(k));
    pp.theta(k) = weight * y(k, k) / total(k);
    const double mag = std::abs(pp.theta(k));
    const double mag2 = mag * mag;
    for (Eigen::Index i = 0; i < k_users; ++i) {
      const Eigen::VectorXcd a = (g_conj.col(k).array() * z.col(i).array()).matrix();
      pp.b.row(k * k_users + i) = mag * a.transpose();
      pp.v -= mag2 * c(k, i) * a.conjugate();
      if (i == k) pp.v += weight * pp.theta(k) * a.conjugate();
    }
  }
  return pp;
}

Eigen::VectorXcd project_unit_modulus(const Eigen::VectorXcd& x, const Eigen::VectorXcd& fallback) {
  Eigen::VectorXcd out(x.size());
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    const double r = std::abs(x(l));
    out(l) = (r > 0.0 && std::isfinite(r)) ? x(l) / r : fallback(l);
  }
  return out;
}

void run_alternating(FollowerState& state, const ChannelSet& channels, const PriceVector& prices,
                     const Scenario& scenario) {
  const double cost = purchase_cost(prices, state.phases.purchased, scenario);
  state.trace.clear();
  state.converged = false;

  update_alpha(state, channels, scenario);
  double previous = surrogate_objective(state, channels, prices, scenario);
  state.trace.push_back({0, previous, state.beamformers.power(), 0.0});

  int it = 1;
  for (; it <= scenario.max_inner_iters; ++it) {
    update_alpha(state, channels, scenario);
    update_beamformers(state, channels, scenario);
    update_phases(state, channels, scenario);

    const double current = surrogate_objective(state, channels, prices, scenario);
    const Eigen::VectorXd gamma = sinrs(effective_channels(channels, state.phases),
                                        state.beamformers.w, scenario.noise_power_w());
    const double gap = (state.alpha - gamma).cwiseAbs().maxCoeff();
    state.trace.push_back({it, current, state.beamformers.power(), gap});

    const double scale = std::abs(current + cost);
    if (std::abs(current - previous) <= scenario.inner_tolerance * scale) {
      state.converged = true;
      break;
    }
    previous = current;
  }
  state.iterations = std::min(it, scenario.max_inner_iters);

  // Tighten the transform so alpha = gamma exactly at the returned point.
  update_alpha(state, channels, scenario);
  const Eigen::VectorXd gamma = state.alpha;
  state.rate = 0.0;
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    state.rate += log_rate(gamma(k), scenario.log_base);
  }
  state.utility = state.rate - cost;
}

/// Aligns the elements of newly purchased RISs with the first-order ascent
/// direction of the phase subproblem, holding everything else fixed.
void align_new_elements(FollowerState& state, const ChannelSet& channels,
                        const std::vector<bool>& previous, const Scenario& scenario) {
  std::vector<bool> fresh(previous.size());
  for (std::size_t s = 0; s < previous.size(); ++s) {
    fresh[s] = state.phases.purchased[s] && !previous[s];
  }
  const std::vector<int> elements = purchased_elements(channels, fresh);
  if (elements.empty()) return;

  PhaseConfig old_phases = state.phases;
  old_phases.purchased = previous;
  const Eigen::MatrixXcd fixed = effective_channels(channels, old_phases);
  const Eigen::VectorXcd zeros = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(elements.size()));
  const PhaseProblem pp =
      build_phase_problem(state, channels, elements, fixed, zeros, scenario.noise_power_w());
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(zeros.size());
  const Eigen::VectorXcd phi = project_unit_modulus(pp.v, ones);
  for (std::size_t l = 0; l < elements.size(); ++l) {
    state.phases.phi(elements[l]) = phi(static_cast<Eigen::Index>(l));
  }
}

}  // namespace

std::vector<double> FollowerState::surrogate_trace() const {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& r : trace) out.push_back(r.surrogate);
  return out;
}

double surrogate_objective(const FollowerState& state, const ChannelSet& channels,
                           const PriceVector& prices, const Scenario& scenario) {
  const Eigen::VectorXd gamma = sinrs(effective_channels(channels, state.phases),
                                      state.beamformers.w, scenario.noise_power_w());
  double f = 0.0;
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    const double a = state.alpha(k);
    f += std::log1p(a) - a + (1.0 + a) * gamma(k) / (1.0 + gamma(k));
  }
  return f * rate_scale(scenario.log_base) -
         purchase_cost(prices, state.phases.purchased, scenario);
}

FollowerState initial_state(const ChannelSet& channels, const PhaseConfig& phases,
                            const Scenario& scenario) {
  const int k_users = channels.num_users();
  const double per_user = scenario.power_budget_w() / k_users;

  FollowerState st;
  st.phases = phases;
  const Eigen::MatrixXcd heff = effective_channels(channels, phases);
  st.beamformers.w = Eigen::MatrixXcd::Zero(channels.num_antennas(), k_users);
  for (int k = 0; k < k_users; ++k) {
    const double norm = heff.row(k).norm();
    if (norm > 0.0 && per_user > 0.0) {
      st.beamformers.w.col(k) = std::sqrt(per_user) * heff.row(k).adjoint() / norm;
    }
  }
  st.alpha = Eigen::VectorXd::Zero(k_users);
  st.beta = Eigen::VectorXcd::Zero(k_users);
  st.theta = Eigen::VectorXcd::Zero(k_users);
  st.reflection_multipliers = Eigen::VectorXd::Zero(channels.num_ris());
  update_alpha(st, channels, scenario);
  return st;
}

void update_alpha(FollowerState& state, const ChannelSet& channels, const Scenario& scenario) {
  state.alpha = sinrs(effective_channels(channels, state.phases), state.beamformers.w,
                      scenario.noise_power_w());
}

void update_beamformers(FollowerState& state, const ChannelSet& channels,
                        const Scenario& scenario) {
  const double p_max = scenario.power_budget_w();
  const Eigen::MatrixXcd heff = effective_channels(channels, state.phases);  // K x M
  const Eigen::Index k_users = heff.rows();
  const Eigen::Index m = heff.cols();

  const Eigen::MatrixXcd y = heff * state.beamformers.w;
  const Eigen::VectorXd total = total_received(y, scenario.noise_power_w());
  state.beta.resize(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    state.beta(k) = std::sqrt(1.0 + state.alpha(k)) * y(k, k) / total(k);
  }

  if (!(p_max > 0.0)) {
    state.beamformers.w.setZero(m, k_users);
    state.lambda0 = 0.0;
    return;
  }

  // maximize sum_k 2 Re{sqrt(1+a_k) beta_k^* h_k w_k} - sum_i w_i^H A w_i
  // subject to sum_k ||w_k||^2 <= p_max, A = sum_k |beta_k|^2 h_k^H h_k.
  const Eigen::MatrixXcd a = heff.adjoint() * state.beta.cwiseAbs2().asDiagonal() * heff;
  Eigen::MatrixXcd rhs(m, k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    rhs.col(k) = std::sqrt(1.0 + state.alpha(k)) * state.beta(k) * heff.row(k).adjoint();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a);
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd proj = eig.eigenvectors().adjoint() * rhs;
  const Eigen::VectorXd energy = proj.rowwise().squaredNorm();
  const double total_energy = energy.sum();

  if (!(total_energy > 0.0)) {
    state.beamformers.w.setZero(m, k_users);
    state.lambda0 = 0.0;
    return;
  }

  auto power_at = [&](double lambda) {
    double p = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (energy(i) == 0.0) continue;
      const double den = d(i) + lambda;
      if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
      p += energy(i) / (den * den);
    }
    return p;
  };

  double lambda = 0.0;
  if (!(power_at(0.0) <= p_max)) {
    // power_at(hi) <= total_energy / hi^2 = p_max.
    double lo = 0.0;
    double hi = std::sqrt(total_energy / p_max);
    int steps = 0;
    while (hi - lo > 1e-15 * hi) {
      if (std::abs(power_at(hi) - p_max) <= 1e-13 * p_max) break;
      if (++steps > kMaxBisectionSteps) {
        throw SolverError("power multiplier bisection did not converge: lo=" +
                          std::to_string(lo) + " hi=" + std::to_string(hi) +
                          " p(hi)=" + std::to_string(power_at(hi)) +
                          " p_max=" + std::to_string(p_max));
      }
      const double mid = 0.5 * (lo + hi);
      if (power_at(mid) > p_max) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    lambda = hi;
  }

  Eigen::VectorXd inv(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double den = d(i) + lambda;
    inv(i) = (energy(i) > 0.0 && den > 0.0) ? 1.0 / den : 0.0;
  }
  state.beamformers.w = eig.eigenvectors() * inv.asDiagonal() * proj;
  const double used = state.beamformers.power();
  if (used > p_max) state.beamformers.w *= std::sqrt(p_max / used);
  state.lambda0 = lambda;
}

void update_phases(FollowerState& state, const ChannelSet& channels, const Scenario& scenario) {
  const std::vector<int> elements = purchased_elements(channels, state.phases.purchased);
  if (elements.empty()) return;

  const Eigen::Index n = static_cast<Eigen::Index>(elements.size());
  Eigen::VectorXcd phi0(n);
  for (Eigen::Index l = 0; l < n; ++l) phi0(l) = state.phases.phi(elements[l]);

  const Eigen::MatrixXcd fixed = channels.direct.adjoint();
  const PhaseProblem pp =
      build_phase_problem(state, channels, elements, fixed, phi0, scenario.noise_power_w());
  state.theta = pp.theta;

  // U = B^H B shares its nonzero spectrum with the small Gram matrix B B^H.
  const Eigen::MatrixXcd gram = pp.b * pp.b.adjoint();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double lmax = std::max(ev.maxCoeff(), 0.0);

  Eigen::VectorXcd best = phi0;
  double best_value = pp.value(phi0);

  // Minimum-norm unconstrained maximizer x = B^H (B B^H)^{+2} B v, projected.
  if (lmax > 0.0) {
    Eigen::VectorXd inv2(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      inv2(i) = ev(i) > 1e-12 * lmax ? 1.0 / (ev(i) * ev(i)) : 0.0;
    }
    const Eigen::VectorXcd x = pp.b.adjoint() *
                               (eig.eigenvectors() * inv2.asDiagonal() *
                                eig.eigenvectors().adjoint() * (pp.b * pp.v));
    const Eigen::VectorXcd candidate = project_unit_modulus(x, phi0);
    const double value = pp.value(candidate);
    if (value > best_value) {
      best = candidate;
      best_value = value;
    }
  }

  // Minorizer step: since |phi_l| = 1, -phi^H U phi is bounded below by a
  // linear function tight at phi0, maximized by the phase of (lmax I - U) phi0 + v.
  {
    const Eigen::VectorXcd u =
        lmax * phi0 - pp.b.adjoint() * (pp.b * phi0) + pp.v;
    const Eigen::VectorXcd candidate = project_unit_modulus(u, phi0);
    const double value = pp.value(candidate);
    if (value > best_value) {
      best = candidate;
      best_value = value;
    }
  }

  for (Eigen::Index l = 0; l < n; ++l) state.phases.phi(elements[l]) = best(l);

  // Unit-modulus multipliers mu_l = Re{conj(phi_l) (v - U phi)_l}, averaged per RIS.
  const Eigen::VectorXcd grad = pp.v - pp.b.adjoint() * (pp.b * best);
  state.reflection_multipliers = Eigen::VectorXd::Zero(channels.num_ris());
  Eigen::Index pos = 0;
  for (int s = 0; s < channels.num_ris(); ++s) {
    if (!state.phases.purchased[s]) continue;
    const int len = channels.block_sizes[s];
    double sum = 0.0;
    for (int l = 0; l < len; ++l, ++pos) sum += (std::conj(best(pos)) * grad(pos)).real();
    state.reflection_multipliers(s) = sum / len;
  }
}

FollowerState solve_p1(const ChannelSet& channels, const PriceVector& prices,
                       const std::vector<bool>& purchased, const Scenario& scenario,
                       const FollowerState* warm_start) {
  if (static_cast<int>(purchased.size()) != channels.num_ris()) {
    throw std::invalid_argument("purchase vector size does not match the number of RISs");
  }
  PhaseConfig phases;
  phases.purchased = purchased;
  phases.phi = Eigen::VectorXcd::Ones(channels.num_elements());

  FollowerState best;
  if (warm_start != nullptr) {
    phases.phi = warm_start->phases.phi;
    best = initial_state(channels, phases, scenario);
    best.beamformers = warm_start->beamformers;
    align_new_elements(best, channels, warm_start->phases.purchased, scenario);
    update_alpha(best, channels, scenario);
  } else {
    best = initial_state(channels, phases, scenario);
  }
  run_alternating(best, channels, prices, scenario);

  for (int r = 0; r < scenario.follower_restarts; ++r) {
    PhaseConfig random_phases = phases;
    Rng rng(scenario.rng_seed, StreamClass::follower_restart,
            {PhaseConfig{purchased, phases.phi}.mask(), static_cast<std::uint64_t>(r)});
    for (Eigen::Index l = 0; l < random_phases.phi.size(); ++l) {
      random_phases.phi(l) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    }
    FollowerState candidate = initial_state(channels, random_phases, scenario);
    run_alternating(candidate, channels, prices, scenario);
    if (candidate.utility > best.utility) best = std::move(candidate);
  }
  return best;
}

bool prefer_purchase(PurchaseMask a, PurchaseMask b) {
  const int ca = std::popcount(a);
  const int cb = std::popcount(b);
  if (ca != cb) return ca > cb;
  // Lexicographic on (psi_1, psi_2, ...): first differing RIS decides.
  const PurchaseMask diff = a ^ b;
  if (diff == 0) return false;
  const int first = std::countr_zero(diff);
  return ((a >> first) & 1U) != 0;
}

FollowerResponseCache::FollowerResponseCache(const ChannelSet& channels, const Scenario& scenario)
    : channels_(channels), scenario_(scenario) {
  channels_.check();
  if (channels_.num_ris() != scenario_.num_ris()) {
    throw std::invalid_argument("channel set and scenario disagree on the number of RISs");
  }
}

std::size_t FollowerResponseCache::solved_count() const {
  std::lock_guard lock(mutex_);
  return solved_.size();
}

const FollowerState& FollowerResponseCache::solve(PurchaseMask mask) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = solved_.find(mask); it != solved_.end()) return *it->second;
  }

  const int s_count = channels_.num_ris();
  const PhaseConfig shape = PhaseConfig::with_mask(channels_, mask);
  const PriceVector free = PriceVector::zeros(s_count);
  auto result = std::make_unique<FollowerState>(
      solve_p1(channels_, free, shape.purchased, scenario_));

  // In exhaustive mode every subset gets solved anyway; also start from the
  // best immediate subset so adding a RIS rarely lands in a worse optimum.
  if (s_count <= scenario_.exhaustive_cap && mask != 0) {
    const FollowerState* parent = nullptr;
    for (int s = 0; s < s_count; ++s) {
      if (((mask >> s) & 1U) == 0) continue;
      const FollowerState& sub = solve(mask & ~(PurchaseMask{1} << s));
      if (parent == nullptr || sub.rate > parent->rate) parent = &sub;
    }
    FollowerState warm = solve_p1(channels_, free, shape.purchased, scenario_, parent);
    if (warm.rate > result->rate) *result = std::move(warm);
  }

  std::lock_guard lock(mutex_);
  auto [it, inserted] = solved_.emplace(mask, std::move(result));
  return *it->second;
}

double FollowerResponseCache::score(PurchaseMask mask, const PriceVector& prices) {
  const FollowerState& st = solve(mask);
  return st.rate - purchase_cost(prices, st.phases.purchased, scenario_);
}

FollowerState FollowerResponseCache::best_response(const PriceVector& prices) {
  return best_response(prices, channels_.num_ris() <= scenario_.exhaustive_cap);
}

FollowerState FollowerResponseCache::best_response(const PriceVector& prices, bool exhaustive) {
  FollowerState out = solve(best_mask(prices, exhaustive));
  const double cost = purchase_cost(prices, out.phases.purchased, scenario_);
  for (auto& rec : out.trace) rec.surrogate -= cost;
  out.utility = bs_utility(channels_, out.phases, out.beamformers, prices, scenario_);
  return out;
}

PurchaseMask FollowerResponseCache::best_mask(const PriceVector& prices) {
  return best_mask(prices, channels_.num_ris() <= scenario_.exhaustive_cap);
}

PurchaseMask FollowerResponseCache::best_mask(const PriceVector& prices, bool exhaustive) {
  const int s_count = channels_.num_ris();
  if (prices.size() != s_count) throw std::invalid_argument("price vector has the wrong size");

  auto better = [](double ua, PurchaseMask a, double ub, PurchaseMask b) {
    const double tol = kTieTolerance * std::max(1.0, std::max(std::abs(ua), std::abs(ub)));
    if (ua > ub + tol) return true;
    if (ub > ua + tol) return false;
    return prefer_purchase(a, b);
  };

  PurchaseMask best_mask = 0;
  double best_u = 0.0;
  if (exhaustive) {
    if (s_count > 20) throw std::invalid_argument("exhaustive purchase search limited to 20 RISs");
    const PurchaseMask count = PurchaseMask{1} << s_count;
    best_u = score(0, prices);
    for (PurchaseMask mask = 1; mask < count; ++mask) {
      const double u = score(mask, prices);
      if (better(u, mask, best_u, best_mask)) {
        best_mask = mask;
        best_u = u;
      }
    }
  } else {
    best_mask = s_count == 64 ? ~PurchaseMask{0} : (PurchaseMask{1} << s_count) - 1;
    best_u = score(best_mask, prices);
    while (best_mask != 0) {
      PurchaseMask cand_mask = 0;
      double cand_u = -std::numeric_limits<double>::infinity();
      bool have = false;
      for (int s = 0; s < s_count; ++s) {
        if (((best_mask >> s) & 1U) == 0) continue;
        const PurchaseMask m = best_mask & ~(PurchaseMask{1} << s);
        const double u = score(m, prices);
        if (!have || better(u, m, cand_u, cand_mask)) {
          cand_mask = m;
          cand_u = u;
          have = true;
        }
      }
      if (!better(cand_u, cand_mask, best_u, best_mask)) break;
      best_mask = cand_mask;
      best_u = cand_u;
    }
  }

  return best_mask;
}

FollowerState purchase_decision(const ChannelSet& channels, const PriceVector& prices,
                                const Scenario& scenario) {
  FollowerResponseCache cache(channels, scenario);
  return cache.best_response(prices);
}

}  // namespace rispricing
