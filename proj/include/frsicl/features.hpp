#pragma once

// Fixed-normalisation state features shared by the PPO network and the
// experience pool. Layout for N sensors (length 2N + 4):
//
//   [0, N)      aoi_j / aoi_norm          aoi_norm = aoi_cap_s, or 40 s when uncapped
//   [N, 2N)     (snr_j + 20) / 80         i.e. [-20, 60] dB mapped to [0, 1]
//   2N, 2N+1    uav x / area, uav y / area
//   2N+2, 2N+3  sin, cos of the orbit angle

#include <cmath>
#include <vector>

#include "frsicl/config.hpp"
#include "frsicl/types.hpp"

namespace frsicl {

using FeatureVector = std::vector<double>;

inline constexpr double kSnrFeatureMinDb = -20.0;
inline constexpr double kSnrFeatureMaxDb = 60.0;
inline constexpr double kDefaultAoiNorm = 40.0;

inline std::size_t feature_length(std::size_t n_sensors) { return 2 * n_sensors + 4; }

inline FeatureVector make_features(const Observation& obs, const WorldConfig& cfg) {
  const std::size_t n = obs.rows.size();
  const double aoi_norm = cfg.aoi_cap_s.value_or(kDefaultAoiNorm);
  FeatureVector f(feature_length(n));
  for (std::size_t j = 0; j < n; ++j) {
    f[j] = obs.rows[j].aoi_s / aoi_norm;
    f[n + j] = (obs.rows[j].snr_db - kSnrFeatureMinDb) / (kSnrFeatureMaxDb - kSnrFeatureMinDb);
  }
  f[2 * n] = obs.uav_pos.x / cfg.area_size_m;
  f[2 * n + 1] = obs.uav_pos.y / cfg.area_size_m;
  f[2 * n + 2] = std::sin(obs.orbit_angle_rad);
  f[2 * n + 3] = std::cos(obs.orbit_angle_rad);
  return f;
}

}  // namespace frsicl
