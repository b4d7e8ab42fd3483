#pragma once

// Air-to-ground channel: elevation angle, line-of-sight probability, path
// loss with LoS/NLoS excess terms, SNR and the per-frame success probability.
//
// Angles are in degrees throughout; the LoS logistic is defined on degrees and
// radians never leave this file. The LoS probability enters the path loss as
// an expectation, so these functions are deterministic.

#include <cmath>
#include <numbers>

#include "frsicl/config.hpp"
#include "frsicl/geometry.hpp"

namespace frsicl {

struct LinkBudget {
  double distance_m = 0.0;  // horizontal
  double elevation_deg = 0.0;
  double p_los = 0.0;
  double path_loss_db = 0.0;
  double snr_db = 0.0;
  double success_p = 0.0;
};

/// atan(h / d) in degrees; exactly 90 when the UAV is directly overhead.
inline double elevation_angle(const Vec3& uav, const Vec2& sensor) {
  const double d = horizontal_distance(uav, sensor);
  if (d == 0.0) return 90.0;
  return std::atan2(uav.z, d) * (180.0 / std::numbers::pi);
}

inline double los_probability(double phi_deg, double a, double b) {
  return 1.0 / (1.0 + a * std::exp(-b * (phi_deg - a)));
}

/// Straight-line UAV-to-sensor range, sqrt(d^2 + h^2) = d sec(phi).
inline double slant_distance(const Vec3& uav, const Vec2& sensor) {
  return std::hypot(horizontal_distance(uav, sensor), uav.z);
}

inline double path_loss_db(const Vec3& uav, const Vec2& sensor, const WorldConfig& cfg) {
  const double p_los = los_probability(elevation_angle(uav, sensor), cfg.env_a, cfg.env_b);
  const double free_space = 20.0 * std::log10(slant_distance(uav, sensor)) +
                            20.0 * std::log10(cfg.carrier_hz) +
                            20.0 * std::log10(4.0 * std::numbers::pi / cfg.light_speed_mps);
  return p_los * (cfg.eta_los_db - cfg.eta_nlos_db) + free_space + cfg.eta_nlos_db;
}

inline double snr_db(double path_loss, const WorldConfig& cfg) {
  return cfg.ptx_dbm - path_loss - cfg.noise_dbm;
}

inline double success_probability(double snr, const WorldConfig& cfg) {
  if (cfg.success_model == SuccessModel::threshold) {
    return snr >= cfg.snr_threshold_db ? 1.0 : 0.0;
  }
  return 1.0 / (1.0 + std::exp((cfg.snr_threshold_db - snr) / cfg.logistic_scale_db));
}

inline LinkBudget link_budget(const Vec3& uav, const Vec2& sensor, const WorldConfig& cfg) {
  LinkBudget lb;
  lb.distance_m = horizontal_distance(uav, sensor);
  lb.elevation_deg = elevation_angle(uav, sensor);
  lb.p_los = los_probability(lb.elevation_deg, cfg.env_a, cfg.env_b);
  lb.path_loss_db = path_loss_db(uav, sensor, cfg);
  lb.snr_db = snr_db(lb.path_loss_db, cfg);
  lb.success_p = success_probability(lb.snr_db, cfg);
  return lb;
}

}  // namespace frsicl
