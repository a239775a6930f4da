#include "rispricing/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "rispricing/channel.hpp"
#include "rispricing/serialization.hpp"

namespace rispricing {

std::string to_string(SweepVariable v) {
  return v == SweepVariable::power_budget_dbm ? "power_budget_dbm" : "diamond_center_x";
}

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::stackelberg_uniform:
      return "stackelberg-uniform";
    case SchemeKind::stackelberg_nonuniform:
      return "stackelberg-nonuniform";
    case SchemeKind::random_uniform:
      return "random-uniform";
    case SchemeKind::random_nonuniform:
      return "random-nonuniform";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "stackelberg-uniform") return SchemeKind::stackelberg_uniform;
  if (name == "stackelberg-nonuniform") return SchemeKind::stackelberg_nonuniform;
  if (name == "random-uniform") return SchemeKind::random_uniform;
  if (name == "random" || name == "random-nonuniform") return SchemeKind::random_nonuniform;
  throw ValidationError("unknown scheme '" + std::string(name) + "'");
}

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "power" || name == "power_budget_dbm") return SweepVariable::power_budget_dbm;
  if (name == "location" || name == "diamond_center_x") return SweepVariable::diamond_center_x;
  throw ValidationError("unknown sweep '" + std::string(name) + "'");
}

std::vector<double> default_power_values() { return {-10, -5, 0, 5, 10, 15, 20}; }

std::vector<double> default_location_values(int points) {
  std::vector<double> v;
  for (int i = 0; i < points; ++i) {
    v.push_back(points == 1 ? kMinCenterX
                            : kMinCenterX + (kMaxCenterX - kMinCenterX) * i / (points - 1));
  }
  return v;
}

void validate(const SweepSpec& spec) {
  if (spec.values.empty()) throw ValidationError("sweep has no values");
  if (spec.schemes.empty()) throw ValidationError("sweep has no schemes");
  if (spec.seeds.empty()) throw ValidationError("sweep has no seeds");
  for (double v : spec.values) {
    const bool power = spec.variable == SweepVariable::power_budget_dbm;
    const double lo = power ? kMinPowerDbm : kMinCenterX;
    const double hi = power ? kMaxPowerDbm : kMaxCenterX;
    if (!(v >= lo && v <= hi)) {
      throw ValidationError("sweep value " + std::to_string(v) + " outside [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "] for " +
                            to_string(spec.variable));
    }
  }
}

Scenario scenario_at(const Scenario& base, SweepVariable variable, double value,
                     std::uint64_t seed) {
  Scenario sc = base;
  sc.rng_seed = seed;
  if (variable == SweepVariable::power_budget_dbm) {
    sc.power_budget_dbm = value;
  } else {
    if (sc.num_ris() != 5) {
      throw ValidationError("location sweep needs the 5-RIS diamond layout");
    }
    const auto d = place_diamond({value, 0.0});
    sc.ris_positions.assign(d.begin(), d.end());
  }
  return sc;
}

EquilibriumReport run_scheme(FollowerResponseCache& follower, SchemeKind kind,
                             std::uint64_t seed) {
  switch (kind) {
    case SchemeKind::stackelberg_uniform:
      return stackelberg_solve(follower, PricingScheme::uniform);
    case SchemeKind::stackelberg_nonuniform:
      return stackelberg_solve(follower, PricingScheme::non_uniform);
    case SchemeKind::random_uniform:
    case SchemeKind::random_nonuniform: {
      Rng rng(seed, StreamClass::prices, {static_cast<std::uint64_t>(kind)});
      return random_pricing(follower, rng,
                            kind == SchemeKind::random_uniform ? PricingScheme::uniform
                                                               : PricingScheme::non_uniform);
    }
  }
  throw std::logic_error("unhandled scheme");
}

std::vector<SweepRow> SweepTable::means(SchemeKind scheme) const {
  std::vector<SweepRow> out;
  for (const auto& r : rows) {
    if (!r.seed && r.scheme == scheme) out.push_back(r);
  }
  return out;
}

namespace {

SweepRow row_from_report(double value, SchemeKind kind, std::uint64_t seed,
                         const EquilibriumReport& report) {
  SweepRow row;
  row.value = value;
  row.scheme = kind;
  row.seed = seed;
  row.u_bs = report.bs_utility;
  row.rounds = report.rounds;
  row.converged = report.converged ? 1.0 : 0.0;
  row.ris_utility = report.ris_utilities;
  row.price = report.prices.q;
  for (bool b : report.follower.phases.purchased) row.purchased.push_back(b ? 1.0 : 0.0);
  return row;
}

/// Mean and standard error of each numeric column.
std::pair<SweepRow, SweepRow> aggregate(const std::vector<SweepRow>& group) {
  SweepRow mean = group.front();
  mean.seed.reset();
  mean.label = "mean";
  SweepRow err = mean;
  err.label = "stderr";
  const double n = static_cast<double>(group.size());

  auto stats = [&](auto get) {
    double sum = 0.0;
    for (const auto& r : group) sum += get(r);
    const double m = sum / n;
    double ss = 0.0;
    for (const auto& r : group) ss += (get(r) - m) * (get(r) - m);
    const double se = group.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return std::pair{m, se};
  };

  std::tie(mean.u_bs, err.u_bs) = stats([](const SweepRow& r) { return r.u_bs; });
  std::tie(mean.rounds, err.rounds) = stats([](const SweepRow& r) { return r.rounds; });
  std::tie(mean.converged, err.converged) = stats([](const SweepRow& r) { return r.converged; });
  for (std::size_t s = 0; s < mean.price.size(); ++s) {
    std::tie(mean.ris_utility[s], err.ris_utility[s]) =
        stats([s](const SweepRow& r) { return r.ris_utility[s]; });
    std::tie(mean.price[s], err.price[s]) = stats([s](const SweepRow& r) { return r.price[s]; });
    std::tie(mean.purchased[s], err.purchased[s]) =
        stats([s](const SweepRow& r) { return r.purchased[s]; });
  }
  return {mean, err};
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void append_row(std::ostringstream& out, SweepVariable variable, const SweepRow& r) {
  out << to_string(variable) << ',' << fmt(r.value) << ',' << to_string(r.scheme) << ','
      << (r.seed ? std::to_string(*r.seed) : r.label) << ',' << fmt(r.u_bs) << ','
      << fmt(r.rounds) << ',' << fmt(r.converged);
  for (double v : r.ris_utility) out << ',' << fmt(v);
  for (double v : r.price) out << ',' << fmt(v);
  for (double v : r.purchased) out << ',' << fmt(v);
  out << '\n';
}

std::string header_line(int num_ris) {
  std::string line;
  for (const auto& col : csv_header(num_ris)) {
    if (!line.empty()) line += ',';
    line += col;
  }
  return line + '\n';
}

}  // namespace

SweepTable run_sweep(const SweepSpec& spec, const Scenario& base) {
  validate(spec);

  struct Task {
    double value;
    std::uint64_t seed;
    Scenario scenario;
  };
  std::vector<Task> tasks;
  for (double value : spec.values) {
    for (std::uint64_t seed : spec.seeds) {
      Scenario sc = scenario_at(base, spec.variable, value, seed);
      try {
        validate(sc);
      } catch (const ValidationError& e) {
        throw ValidationError("sweep point " + to_string(spec.variable) + "=" + fmt(value) +
                              " seed=" + std::to_string(seed) + ": " + e.what());
      }
      tasks.push_back({value, seed, std::move(sc)});
    }
  }

  // results[task][scheme]
  std::vector<std::vector<SweepRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        const Task& task = tasks[t];
        const ChannelSet channels = generate_channels(task.scenario, build_geometry(task.scenario));
        FollowerResponseCache follower(channels, task.scenario);
        for (SchemeKind kind : spec.schemes) {
          const EquilibriumReport report = run_scheme(follower, kind, task.seed);
          if (spec.audit) {
            const EquilibriumReport reloaded = report_from_json(report_to_json(report));
            const double audited = audit_bs_utility(reloaded, channels, task.scenario);
            if (audited != report.bs_utility) {
              throw std::runtime_error("audit mismatch at " + to_string(spec.variable) + "=" +
                                       fmt(task.value) + " seed=" + std::to_string(task.seed) +
                                       ": " + fmt(audited) + " vs " + fmt(report.bs_utility));
            }
          }
          results[t].push_back(row_from_report(task.value, kind, task.seed, report));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };

  int workers = spec.workers > 0 ? spec.workers
                                 : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepTable table;
  table.variable = spec.variable;
  table.num_ris = base.num_ris();
  const std::size_t n_seeds = spec.seeds.size();
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    for (std::size_t k = 0; k < spec.schemes.size(); ++k) {
      std::vector<SweepRow> group;
      for (std::size_t j = 0; j < n_seeds; ++j) {
        const SweepRow& row = results[v * n_seeds + j][k];
        table.all_converged = table.all_converged && row.converged == 1.0;
        group.push_back(row);
        table.rows.push_back(row);
      }
      auto [mean, err] = aggregate(group);
      table.rows.push_back(std::move(mean));
      table.stderr_rows.push_back(std::move(err));
    }
  }
  return table;
}

std::vector<std::string> csv_header(int num_ris) {
  std::vector<std::string> cols = {"variable", "value", "scheme",   "seed",
                                   "u_bs",     "rounds", "converged"};
  for (const char* prefix : {"V_", "q_", "psi_"}) {
    for (int s = 1; s <= num_ris; ++s) cols.push_back(prefix + std::to_string(s));
  }
  return cols;
}

std::string to_csv(const SweepTable& table) {
  std::ostringstream out;
  out << header_line(table.num_ris);
  for (const auto& r : table.rows) append_row(out, table.variable, r);
  return out.str();
}

std::string stderr_csv(const SweepTable& table) {
  std::ostringstream out;
  out << header_line(table.num_ris);
  for (const auto& r : table.stderr_rows) append_row(out, table.variable, r);
  return out.str();
}

void emit_csv(const SweepTable& table, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  file << to_csv(table);
  file.flush();
  if (!file) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string plot_script(const SweepTable& table, const std::string& csv_name) {
  const bool power = table.variable == SweepVariable::power_budget_dbm;
  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
     << "\"\"\"Plots the seed-averaged curves of " << csv_name << ".\"\"\"\n"
     << "import csv\nimport sys\nfrom collections import defaultdict\n\n"
     << "import matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n"
     << "path = sys.argv[1] if len(sys.argv) > 1 else \"" << csv_name << "\"\n"
     << "curves = defaultdict(lambda: defaultdict(list))\n"
     << "with open(path, newline=\"\") as f:\n"
     << "    for row in csv.DictReader(f):\n"
     << "        if row[\"seed\"] != \"mean\":\n            continue\n"
     << "        c = curves[row[\"scheme\"]]\n"
     << "        c[\"x\"].append(float(row[\"value\"]))\n"
     << "        c[\"u_bs\"].append(float(row[\"u_bs\"]))\n"
     << "        c[\"V_1\"].append(float(row[\"V_1\"]))\n"
     << "        c[\"q_1\"].append(float(row[\"q_1\"]))\n"
     << "        c[\"q_mean\"].append(sum(float(v) for k, v in row.items() if k.startswith(\"q_\"))"
     << " / " << table.num_ris << ")\n\n";
  if (power) {
    py << "panels = [(\"u_bs\", \"BS utility\"), (\"V_1\", \"RIS 1 utility\"), "
          "(\"q_1\", \"RIS 1 price\")]\nxlabel = \"BS power budget (dBm)\"\n";
  } else {
    py << "panels = [(\"u_bs\", \"BS utility\"), (\"q_mean\", \"mean RIS price\")]\n"
          "xlabel = \"diamond center x (m)\"\n";
  }
  py << "fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4))\n"
     << "for ax, (key, title) in zip(axes, panels):\n"
     << "    for scheme, c in sorted(curves.items()):\n"
     << "        ax.plot(c[\"x\"], c[key], marker=\"o\", label=scheme)\n"
     << "    ax.set_xlabel(xlabel)\n    ax.set_title(title)\n    ax.grid(True)\n"
     << "axes[0].legend()\nfig.tight_layout()\n"
     << "fig.savefig(path.rsplit(\".\", 1)[0] + \".png\", dpi=120)\n";
  return py.str();
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace rispricing
