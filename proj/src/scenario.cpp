#include "starswipt/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace starswipt {

void SystemConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("SystemConfig: " + what); };
  if (m < 1) fail("m must be >= 1");
  if (n < 1) fail("n must be >= 1");
  if (k_r < 1) fail("k_r must be >= 1");
  if (k_t < 1) fail("k_t must be >= 1");
  if (!(p_max_w() > 0.0)) fail("p_max must be positive");
  if (!(sigma2_w() > 0.0)) fail("sigma2 must be positive");
  if (delta2_w() < 0.0) fail("delta2 must be nonnegative");
  if (e_min_w() < 0.0) fail("e_min must be nonnegative");
  if (!(eta > 0.0 && eta <= 1.0)) fail("eta must be in (0, 1]");
  if (!(d0_m > 0.0)) fail("d0 must be positive");
  if (user_region_radius < 0.0) fail("user_region_radius must be nonnegative");
  if (rician_k_linear() < 0.0) fail("rician factor must be nonnegative");
}

double path_loss_amplitude(double d, double alpha, double c0_db, double d0) {
  if (!(d > 0.0)) throw std::domain_error("path_loss_amplitude: distance must be positive");
  if (!(d0 > 0.0)) throw std::domain_error("path_loss_amplitude: reference distance must be positive");
  return std::sqrt(db_to_linear(c0_db) * std::pow(d / d0, -alpha));
}

CMat sample_channel(int rows, int cols, double rician_k_linear,
                    const std::optional<CMat>& los, RngStream& rng) {
  if (rician_k_linear < 0.0) throw std::domain_error("sample_channel: Rician factor must be nonnegative");
  const double w_los = std::sqrt(rician_k_linear / (1.0 + rician_k_linear));
  const double w_nlos = std::sqrt(1.0 / (1.0 + rician_k_linear));

  CMat los_part(rows, cols);
  if (los.has_value()) {
    if (los->rows() != rows || los->cols() != cols)
      throw std::invalid_argument("sample_channel: LoS component has wrong dimensions");
    los_part = *los;
  } else {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double p = rng.phase();
        los_part(r, c) = std::complex<double>(std::cos(p), std::sin(p));
      }
  }

  CMat out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = w_los * los_part(r, c) + w_nlos * rng.cnormal();
  return out;
}

std::vector<Vec3> place_users(const SystemConfig& config, RngStream& rng) {
  std::vector<Vec3> positions;
  positions.reserve(config.k());
  auto draw_disk = [&](const Vec3& center) {
    const double r = config.user_region_radius * std::sqrt(rng.uniform());
    const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
    return Vec3(center.x() + r * std::cos(a), center.y() + r * std::sin(a), center.z());
  };
  for (int k = 0; k < config.k_r; ++k) positions.push_back(draw_disk(config.region_center_r));
  for (int k = 0; k < config.k_t; ++k) positions.push_back(draw_disk(config.region_center_t));
  return positions;
}

ChannelSet build_channels(const SystemConfig& config) {
  config.validate();
  const int k = config.k();

  RngStream pos_rng(derive_seed(config.seed, "user-positions"));
  const std::vector<Vec3> users = place_users(config, pos_rng);

  const double kappa = config.rician_k_linear();
  ChannelSet cs;
  cs.sides.resize(k);
  for (int i = 0; i < k; ++i) cs.sides[i] = config.side_of_user(i);

  {
    RngStream rng(derive_seed(config.seed, "channel-G"));
    const double d = (config.ris_pos - config.bs_pos).norm();
    const double amp = path_loss_amplitude(d, config.alpha_bs_ris, config.c0_db, config.d0_m);
    cs.G = amp * sample_channel(config.n, config.m, kappa, std::nullopt, rng);
  }
  cs.h.resize(k);
  for (int i = 0; i < k; ++i) {
    RngStream rng(derive_seed(config.seed, "channel-h", i));
    const double d = (users[i] - config.bs_pos).norm();
    const double amp = path_loss_amplitude(d, config.alpha_bs_user, config.c0_db, config.d0_m);
    cs.h[i] = amp * sample_channel(config.m, 1, 0.0, std::nullopt, rng).col(0);
  }
  cs.g.resize(k);
  for (int i = 0; i < k; ++i) {
    RngStream rng(derive_seed(config.seed, "channel-g", i));
    const double d = (users[i] - config.ris_pos).norm();
    const double amp = path_loss_amplitude(d, config.alpha_ris_user, config.c0_db, config.d0_m);
    cs.g[i] = amp * sample_channel(config.n, 1, kappa, std::nullopt, rng).col(0);
  }
  return cs;
}

}  // namespace starswipt
