#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "starswipt/scenario.hpp"

using namespace starswipt;

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(dbm_to_watt(42.0) == doctest::Approx(15.848931924611142).epsilon(1e-12));
  CHECK(dbm_to_watt(-70.0) == doctest::Approx(1e-10).epsilon(1e-12));
  CHECK(watt_to_dbm(1.0) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(watt_to_dbm(dbm_to_watt(-13.7)) == doctest::Approx(-13.7).epsilon(1e-12));
  CHECK(db_to_linear(3.0) == doctest::Approx(1.9952623149688795).epsilon(1e-12));
}

TEST_CASE("path loss amplitude against hand-computed values") {
  // sqrt(10^(-30/10) * (d/1)^-alpha), worked out by hand for a few points
  CHECK(path_loss_amplitude(1.0, 2.2, -30.0, 1.0) == doctest::Approx(0.03162277660168379).epsilon(1e-12));
  CHECK(path_loss_amplitude(10.0, 2.0, -30.0, 1.0) == doctest::Approx(0.0031622776601683794).epsilon(1e-12));
  CHECK(path_loss_amplitude(2.0, 2.2, -30.0, 1.0) == doctest::Approx(0.014752546926684592).epsilon(1e-12));
  CHECK(path_loss_amplitude(15.0, 2.2, -30.0, 1.0) == doctest::Approx(0.0016080502468001948).epsilon(1e-12));
  CHECK_THROWS(path_loss_amplitude(0.0, 2.0, -30.0, 1.0));
  CHECK_THROWS(path_loss_amplitude(1.0, 2.0, -30.0, 0.0));
}

TEST_CASE("config validation names the offending field") {
  SystemConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.m = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("m"), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.k_r = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SystemConfig{};
  cfg.eta = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("eta"), std::invalid_argument);
}

TEST_CASE("rayleigh samples have unit average power") {
  RngStream rng(derive_seed(7, "test-rayleigh"));
  const int rows = 200, cols = 100;
  CMat H = sample_channel(rows, cols, 0.0, std::nullopt, rng);
  REQUIRE(H.rows() == rows);
  REQUIRE(H.cols() == cols);
  const double mean_power = H.squaredNorm() / (rows * cols);
  CHECK(mean_power == doctest::Approx(1.0).epsilon(0.03));
  // Rayleigh: complex mean should vanish
  CHECK(std::abs(H.mean()) < 0.02);
}

TEST_CASE("rician mixing preserves power and adds a deterministic part") {
  RngStream rng(derive_seed(7, "test-rician"));
  const double kappa = db_to_linear(3.0);
  CMat H = sample_channel(150, 100, kappa, std::nullopt, rng);
  CHECK(H.squaredNorm() / (150.0 * 100.0) == doctest::Approx(1.0).epsilon(0.03));

  // With a pinned LoS matrix and huge kappa the sample collapses onto it.
  RngStream rng2(derive_seed(7, "test-rician-los"));
  CMat los = CMat::Ones(4, 3);
  CMat H2 = sample_channel(4, 3, 1e12, los, rng2);
  CHECK((H2 - los).norm() < 1e-4);

  RngStream rng3(derive_seed(7, "test-rician-los"));
  CHECK_THROWS(sample_channel(5, 3, 1.0, los, rng3));  // LoS shape mismatch
}

TEST_CASE("user placement is uniform over the two disks") {
  SystemConfig cfg;
  cfg.k_r = 2;
  cfg.k_t = 2;
  RngStream rng(derive_seed(11, "test-placement"));
  double sum_r2_reflect = 0.0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    auto pos = place_users(cfg, rng);
    REQUIRE(pos.size() == 4);
    for (int k = 0; k < 4; ++k) {
      const Vec3 center = k < cfg.k_r ? cfg.region_center_r : cfg.region_center_t;
      const double r = (pos[k] - center).norm();
      CHECK(r <= cfg.user_region_radius + 1e-12);
      CHECK(pos[k].z() == center.z());
    }
    sum_r2_reflect += (pos[0] - cfg.region_center_r).squaredNorm();
  }
  // Uniform over a disk of radius R: E[r^2] = R^2/2.
  CHECK(sum_r2_reflect / trials == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("channel builder shapes, sides and determinism") {
  SystemConfig cfg;
  cfg.n = 8;
  cfg.seed = 42;
  ChannelSet cs = build_channels(cfg);
  REQUIRE(cs.num_users() == 4);
  CHECK(cs.G.rows() == 8);
  CHECK(cs.G.cols() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(cs.h[k].size() == 4);
    CHECK(cs.g[k].size() == 8);
    CHECK((cs.sides[k] == (k < 2 ? Side::Reflect : Side::Transmit)));
  }

  ChannelSet again = build_channels(cfg);
  CHECK((cs.G - again.G).norm() == 0.0);
  for (int k = 0; k < 4; ++k) {
    CHECK((cs.h[k] - again.h[k]).norm() == 0.0);
    CHECK((cs.g[k] - again.g[k]).norm() == 0.0);
  }

  cfg.seed = 43;
  ChannelSet other = build_channels(cfg);
  CHECK((cs.G - other.G).norm() > 0.0);
}

TEST_CASE("direct links do not depend on the surface size") {
  SystemConfig small, large;
  small.n = 8;
  large.n = 32;
  small.seed = large.seed = 99;
  ChannelSet a = build_channels(small);
  ChannelSet b = build_channels(large);
  for (int k = 0; k < a.num_users(); ++k)
    CHECK((a.h[k] - b.h[k]).norm() == 0.0);  // bitwise equal draws
}

TEST_CASE("channel magnitudes follow the path-loss law") {
  SystemConfig cfg;
  cfg.n = 64;
  cfg.m = 16;
  const double pl_g = std::pow(path_loss_amplitude((cfg.bs_pos - cfg.ris_pos).norm(),
                                                   cfg.alpha_bs_ris, cfg.c0_db, cfg.d0_m),
                               2.0);
  double g_power = 0.0, h_ratio = 0.0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = 1000 + s;
    ChannelSet cs = build_channels(cfg);
    g_power += cs.G.squaredNorm() / (cfg.n * cfg.m);
    // Positions are reconstructible from the documented child stream.
    RngStream pos_rng(derive_seed(cfg.seed, "user-positions"));
    auto pos = place_users(cfg, pos_rng);
    const double d = (cfg.bs_pos - pos[0]).norm();
    const double pl_h =
        std::pow(path_loss_amplitude(d, cfg.alpha_bs_user, cfg.c0_db, cfg.d0_m), 2.0);
    h_ratio += cs.h[0].squaredNorm() / (cfg.m * pl_h);
  }
  CHECK(g_power / seeds == doctest::Approx(pl_g).epsilon(0.05));
  CHECK(h_ratio / seeds == doctest::Approx(1.0).epsilon(0.15));
}
