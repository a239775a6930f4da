#include "rispricing/serialization.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace rispricing {

using nlohmann::json;

namespace {

json complex_to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

std::complex<double> complex_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json matrix_to_json(const Eigen::MatrixXcd& m) {
  json data = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) data.push_back(complex_to_json(m(r, c)));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"order", "column-major"}, {"data", data}};
}

Eigen::MatrixXcd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("matrix data length does not match its shape");
  }
  Eigen::MatrixXcd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = complex_from_json(data[i++]);
  }
  return m;
}

json real_vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd real_vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string scheme_name(PricingScheme scheme) {
  return scheme == PricingScheme::uniform ? "uniform" : "nonuniform";
}

PricingScheme parse_pricing_scheme(std::string_view name) {
  if (name == "uniform") return PricingScheme::uniform;
  if (name == "nonuniform" || name == "non-uniform") return PricingScheme::non_uniform;
  throw std::invalid_argument("unknown pricing scheme '" + std::string(name) + "'");
}

std::string dump_channels(const ChannelSet& channels) {
  const json doc{
      {"schema_version", ChannelSet::kDumpVersion},
      {"kind", "rispricing.channels"},
      {"block_sizes", channels.block_sizes},
      {"direct", matrix_to_json(channels.direct)},
      {"bs_ris", matrix_to_json(channels.bs_ris)},
      {"ris_user", matrix_to_json(channels.ris_user)},
  };
  return doc.dump() + "\n";
}

ChannelSet load_channels(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != ChannelSet::kDumpVersion) {
      throw std::invalid_argument("unsupported channel dump version");
    }
    ChannelSet ch;
    ch.block_sizes = doc.at("block_sizes").get<std::vector<int>>();
    ch.direct = matrix_from_json(doc.at("direct"));
    ch.bs_ris = matrix_from_json(doc.at("bs_ris"));
    ch.ris_user = matrix_from_json(doc.at("ris_user"));
    ch.check();
    return ch;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed channel dump: ") + e.what());
  }
}

std::string report_to_json(const EquilibriumReport& r) {
  const FollowerState& f = r.follower;
  json trace = json::array();
  for (const auto& rec : f.trace) {
    trace.push_back({rec.iter, rec.surrogate, rec.power_used, rec.max_alpha_gap});
  }
  std::vector<int> purchased;
  for (bool b : f.phases.purchased) purchased.push_back(b ? 1 : 0);
  json beta = json::array();
  for (Eigen::Index k = 0; k < f.beta.size(); ++k) beta.push_back(complex_to_json(f.beta(k)));
  json theta = json::array();
  for (Eigen::Index k = 0; k < f.theta.size(); ++k) theta.push_back(complex_to_json(f.theta(k)));

  json se{
      {"grid", r.se.grid},
      {"max_improvement", r.se.max_improvement},
      {"best_deviation_price", r.se.best_deviation_price},
      {"leader_accepted", std::vector<bool>(r.se.leader_accepted)},
      {"accepted", r.se.accepted},
  };

  const json doc{
      {"schema_version", EquilibriumReport::kSchemaVersion},
      {"method", r.method},
      {"scheme", scheme_name(r.scheme)},
      {"prices", r.prices.q},
      {"ris_utilities", r.ris_utilities},
      {"bs_utility", r.bs_utility},
      {"rounds", r.rounds},
      {"converged", r.converged},
      {"price_trace", r.price_trace},
      {"se", se},
      {"follower",
       {{"purchased", purchased},
        {"phi", matrix_to_json(f.phases.phi)},
        {"w", matrix_to_json(f.beamformers.w)},
        {"alpha", real_vector_to_json(f.alpha)},
        {"beta", beta},
        {"theta", theta},
        {"lambda0", f.lambda0},
        {"reflection_multipliers", real_vector_to_json(f.reflection_multipliers)},
        {"iterations", f.iterations},
        {"converged", f.converged},
        {"rate", f.rate},
        {"utility", f.utility},
        {"trace", trace}}},
  };
  return doc.dump(2) + "\n";
}

EquilibriumReport report_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != EquilibriumReport::kSchemaVersion) {
      throw std::invalid_argument("unsupported report version");
    }
    EquilibriumReport r;
    r.method = doc.at("method").get<std::string>();
    r.scheme = parse_pricing_scheme(doc.at("scheme").get<std::string>());
    r.prices = {doc.at("prices").get<std::vector<double>>(), r.scheme};
    r.ris_utilities = doc.at("ris_utilities").get<std::vector<double>>();
    r.bs_utility = doc.at("bs_utility").get<double>();
    r.rounds = doc.at("rounds").get<int>();
    r.converged = doc.at("converged").get<bool>();
    r.price_trace = doc.at("price_trace").get<std::vector<std::vector<double>>>();

    const json& se = doc.at("se");
    r.se.grid = se.at("grid").get<std::vector<double>>();
    r.se.max_improvement = se.at("max_improvement").get<std::vector<double>>();
    r.se.best_deviation_price = se.at("best_deviation_price").get<std::vector<double>>();
    r.se.leader_accepted = se.at("leader_accepted").get<std::vector<bool>>();
    r.se.accepted = se.at("accepted").get<bool>();

    const json& f = doc.at("follower");
    FollowerState& st = r.follower;
    for (int b : f.at("purchased").get<std::vector<int>>()) st.phases.purchased.push_back(b != 0);
    st.phases.phi = matrix_from_json(f.at("phi"));
    st.beamformers.w = matrix_from_json(f.at("w"));
    st.alpha = real_vector_from_json(f.at("alpha"));
    const json& beta = f.at("beta");
    st.beta.resize(static_cast<Eigen::Index>(beta.size()));
    for (std::size_t k = 0; k < beta.size(); ++k) st.beta(k) = complex_from_json(beta[k]);
    const json& theta = f.at("theta");
    st.theta.resize(static_cast<Eigen::Index>(theta.size()));
    for (std::size_t k = 0; k < theta.size(); ++k) st.theta(k) = complex_from_json(theta[k]);
    st.lambda0 = f.at("lambda0").get<double>();
    st.reflection_multipliers = real_vector_from_json(f.at("reflection_multipliers"));
    st.iterations = f.at("iterations").get<int>();
    st.converged = f.at("converged").get<bool>();
    st.rate = f.at("rate").get<double>();
    st.utility = f.at("utility").get<double>();
    for (const auto& rec : f.at("trace")) {
      st.trace.push_back({rec.at(0).get<int>(), rec.at(1).get<double>(), rec.at(2).get<double>(),
                          rec.at(3).get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed report: ") + e.what());
  }
}

std::string trace_to_csv(const FollowerState& state) {
  std::ostringstream out;
  out << "iter,surrogate,power_used,max_alpha_gap\n";
  char buf[128];
  for (const auto& rec : state.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", rec.iter, rec.surrogate,
                  rec.power_used, rec.max_alpha_gap);
    out << buf;
  }
  return out.str();
}

double audit_bs_utility(const EquilibriumReport& report, const ChannelSet& channels,
                        const Scenario& scenario) {
  return bs_utility(channels, report.follower.phases, report.follower.beamformers, report.prices,
                    scenario);
}

}  // namespace rispricing
