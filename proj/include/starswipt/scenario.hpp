#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "starswipt/rng.hpp"

namespace starswipt {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

enum class Side { Reflect, Transmit };

// Scenario constants. All internal math is in linear units (watts); the
// dBm/dB twins are kept only for config I/O and result rows.
struct SystemConfig {
  int m = 4;    // BS antennas
  int n = 16;   // STAR-RIS elements
  int k_r = 2;  // users in the reflection region
  int k_t = 2;  // users in the transmission region

  double p_max_dbm = 42.0;    // total BS transmit power
  double sigma2_dbm = -70.0;  // antenna noise variance
  double delta2_dbm = -60.0;  // ID processing noise variance
  double e_min_dbm = -40.0;   // minimum harvested energy per user
  double eta = 0.7;           // EH conversion efficiency

  double c0_db = -30.0;  // reference path loss at d0
  double d0_m = 1.0;
  double alpha_bs_ris = 2.2;
  double alpha_ris_user = 2.0;
  double alpha_bs_user = 3.8;
  double rician_k_db = 3.0;  // Rician factor for all STAR-RIS assisted links

  Vec3 bs_pos{0.0, 0.0, 2.0};
  Vec3 ris_pos{0.0, 15.0, 2.0};
  Vec3 region_center_r{-2.0, 15.0, 1.0};
  Vec3 region_center_t{2.0, 15.0, 1.0};
  double user_region_radius = 1.0;

  std::uint64_t seed = 1;

  int k() const { return k_r + k_t; }
  double p_max_w() const { return dbm_to_watt(p_max_dbm); }
  double sigma2_w() const { return dbm_to_watt(sigma2_dbm); }
  double delta2_w() const { return dbm_to_watt(delta2_dbm); }
  double e_min_w() const { return e_min_dbm <= -300.0 ? 0.0 : dbm_to_watt(e_min_dbm); }
  double rician_k_linear() const { return db_to_linear(rician_k_db); }
  Side side_of_user(int k) const { return k < k_r ? Side::Reflect : Side::Transmit; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// One channel realization: G is BS->RIS, h[k] the direct BS->user link,
// g[k] the RIS->user link. Users 0..k_r-1 sit in the reflection region.
struct ChannelSet {
  CMat G;                   // N x M
  std::vector<CVec> h;      // K vectors of length M
  std::vector<CVec> g;      // K vectors of length N
  std::vector<Side> sides;  // per user

  int num_users() const { return static_cast<int>(h.size()); }
};

// Amplitude gain sqrt(10^(c0_db/10) * (d/d0)^-alpha). Scaling a unit-power
// small-scale channel by this value gives the path-loss law in power.
double path_loss_amplitude(double d, double alpha, double c0_db, double d0);

// Rician sample: sqrt(k/(1+k)) * H_los + sqrt(1/(1+k)) * H_nlos with
// H_nlos i.i.d. CN(0,1). When los is not given, the LoS part gets fresh
// unit-modulus entries with uniform phases each call (the paper never
// pins an array geometry, so no structured steering vector is assumed).
// kappa = 0 degenerates to Rayleigh fading.
CMat sample_channel(int rows, int cols, double rician_k_linear,
                    const std::optional<CMat>& los, RngStream& rng);

// Uniform-in-area positions inside the two horizontal disks, reflection
// users first. Heights are fixed at the region-center z.
std::vector<Vec3> place_users(const SystemConfig& config, RngStream& rng);

// Full realization for one scenario draw. Each random object consumes its
// own child stream derived from config.seed:
//   positions -> ("user-positions"), G -> ("channel-G"),
//   h_k -> ("channel-h", k), g_k -> ("channel-g", k)
// so the direct links do not depend on N and vice versa. Draw order within
// a stream: LoS phases row-major, then NLoS entries row-major.
ChannelSet build_channels(const SystemConfig& config);

}  // namespace starswipt
