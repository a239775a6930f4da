#include <doctest.h>

#include <json.hpp>

#include "rispricing/channel.hpp"
#include "rispricing/rng.hpp"
#include "support.hpp"

using namespace rispricing;

TEST_CASE("path loss") {
  CHECK(path_loss_db(1.0, 3.5, 30.0) == doctest::Approx(30.0));
  CHECK(path_loss_db(10.0, 2.0, 30.0) == doctest::Approx(50.0));
  CHECK(path_loss_db(100.0, 3.5, 30.0) == doctest::Approx(100.0));
  CHECK(path_loss_db(0.25, 3.5, 30.0) == doctest::Approx(30.0));
  CHECK(path_loss_db(0.0, 2.0, 30.0) == doctest::Approx(30.0));
  CHECK(path_gain(1.0, 2.0, 30.0) == doctest::Approx(1e-3));
}

TEST_CASE("dimensions and blocks") {
  Scenario sc;
  sc.elements_per_ris = {3, 5, 2, 4, 6};
  const ChannelSet ch = generate_channels(sc, build_geometry(sc));
  CHECK(ch.num_antennas() == 4);
  CHECK(ch.num_users() == 4);
  CHECK(ch.num_elements() == 20);
  CHECK(ch.ris_user.rows() == 20);
  CHECK(ch.block_offset(2) == 8);
  CHECK_NOTHROW(ch.check());

  ChannelSet bad = ch;
  bad.block_sizes = {3, 5};
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = ch;
  bad.direct(0, 0) = {std::nan(""), 0.0};
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("generation is deterministic") {
  Scenario sc;
  sc.rng_seed = 17;
  const Geometry g = build_geometry(sc);
  CHECK(generate_channels(sc, g) == generate_channels(sc, g));
  sc.rng_seed = 18;
  CHECK_FALSE(generate_channels(sc, build_geometry(sc)) == generate_channels(Scenario{}, g));
}

TEST_CASE("second moment follows the path loss") {
  Scenario sc;
  sc.num_antennas = 1;
  sc.num_users = 1;
  sc.elements_per_ris = {1};
  sc.ris_positions = {{30.0, 40.0}};  // 50 m from the BS
  sc.user_cluster_radius = 0.0;

  SUBCASE("direct link at 200 m") {
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      sc.rng_seed = static_cast<std::uint64_t>(i);
      acc += std::norm(generate_channels(sc, build_geometry(sc)).direct(0, 0));
    }
    CHECK(acc / n == doctest::Approx(path_gain(200.0, 3.5, 30.0)).epsilon(0.03));
  }

  SUBCASE("RIS links use the RIS exponent") {
    double bs_ris = 0.0;
    double ris_user = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      sc.rng_seed = static_cast<std::uint64_t>(i);
      const ChannelSet ch = generate_channels(sc, build_geometry(sc));
      bs_ris += std::norm(ch.bs_ris(0, 0));
      ris_user += std::norm(ch.ris_user(0, 0));
    }
    CHECK(bs_ris / n == doctest::Approx(path_gain(50.0, 2.0, 30.0)).epsilon(0.03));
    const double d = distance({30.0, 40.0}, sc.user_cluster_center);
    CHECK(ris_user / n == doctest::Approx(path_gain(d, 2.0, 30.0)).epsilon(0.03));
  }

  SUBCASE("reference distance gives 30 dB") {
    sc.user_cluster_center = {1.0, 0.0};
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      sc.rng_seed = static_cast<std::uint64_t>(i);
      acc += std::norm(generate_channels(sc, build_geometry(sc)).direct(0, 0));
    }
    CHECK(acc / n == doctest::Approx(1e-3).epsilon(0.03));
  }
}

TEST_CASE("moving nodes keeps the small-scale fading") {
  Scenario sc;
  sc.rng_seed = 3;
  const ChannelSet a = generate_channels(sc, build_geometry(sc));

  Scenario moved_users = sc;
  moved_users.user_cluster_center = {150.0, 20.0};
  const ChannelSet b = generate_channels(moved_users, build_geometry(moved_users));
  CHECK(a.bs_ris == b.bs_ris);
  CHECK_FALSE(a.direct == b.direct);

  // Same draws up to the large-scale factor when only RISs move.
  Scenario moved_ris = sc;
  const auto d = place_diamond({120.0, 0.0});
  moved_ris.ris_positions.assign(d.begin(), d.end());
  const Geometry g = build_geometry(moved_ris);
  const ChannelSet c = generate_channels(moved_ris, g);
  CHECK(a.direct == c.direct);
  const double ratio_a = std::abs(a.bs_ris(0, 0)) / std::abs(a.bs_ris(0, 1));
  const double ratio_c = std::abs(c.bs_ris(0, 0)) / std::abs(c.bs_ris(0, 1));
  CHECK(ratio_a == doctest::Approx(ratio_c).epsilon(1e-12));
}

TEST_CASE("channel dump round-trips bit-exactly") {
  Scenario sc;
  sc.rng_seed = 8;
  sc.elements_per_ris = {2, 3, 1, 1, 4};
  const ChannelSet ch = generate_channels(sc, build_geometry(sc));
  const ChannelSet back = load_channels(dump_channels(ch));
  CHECK(back == ch);
  CHECK(back.block_sizes == ch.block_sizes);

  CHECK_THROWS(load_channels("{}"));
  CHECK_THROWS(load_channels("not json"));
  nlohmann::json doc = nlohmann::json::parse(dump_channels(ch));
  doc["schema_version"] = 9;
  CHECK_THROWS(load_channels(doc.dump()));
}
