#pragma once

// World configuration: every physical, channel and episode parameter of a run.
// Powers are stored in dBm because the channel math is in dB (20 dBm = 100 mW).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "frsicl/geometry.hpp"

namespace frsicl {

enum class SuccessModel { threshold, logistic };

inline std::string_view to_string(SuccessModel m) {
  return m == SuccessModel::threshold ? "threshold" : "logistic";
}

/// Raised for invalid configuration; field() names the first violated field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline constexpr double kSpeedOfLight = 299792458.0;

struct WorldConfig {
  double area_size_m = 100.0;
  std::size_t n_sensors = 10;
  std::size_t n_steps = 30;
  double dt_s = 1.0;
  double v_min_mps = 0.0;
  double v_max_mps = 15.0;
  double altitude_m = 10.0;
  double orbit_radius_m = 35.0;
  Vec2 orbit_center{50.0, 50.0};
  double ptx_dbm = 20.0;
  double noise_dbm = -90.0;
  double env_a = 9.61;
  double env_b = 0.16;
  double eta_los_db = 1.0;
  double eta_nlos_db = 20.0;
  double carrier_hz = 2.4e9;
  double light_speed_mps = kSpeedOfLight;
  SuccessModel success_model = SuccessModel::threshold;
  double snr_threshold_db = 5.0;
  double logistic_scale_db = 2.0;
  std::size_t queue_cap = 40;
  double battery_j = 50.0;
  double e_tx_j = 0.05;
  std::optional<double> aoi_cap_s = 40.0;
  std::uint64_t seed = 0;

  bool operator==(const WorldConfig&) const = default;
};

namespace detail {

inline void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

inline bool finite(double x) { return std::isfinite(x); }

}  // namespace detail

/// Returns cfg unchanged when every invariant holds; otherwise throws
/// ConfigError for the first violated field, in declaration order.
inline const WorldConfig& validate_config(const WorldConfig& cfg) {
  using detail::finite;
  using detail::require;
  require(finite(cfg.area_size_m) && cfg.area_size_m > 0, "area_size_m", "area_size_m must be positive");
  require(cfg.n_sensors >= 1, "n_sensors", "n_sensors must be at least 1");
  require(cfg.n_steps >= 1, "n_steps", "n_steps must be at least 1");
  require(finite(cfg.dt_s) && cfg.dt_s > 0, "dt_s", "dt_s must be positive");
  require(finite(cfg.v_min_mps) && cfg.v_min_mps >= 0, "v_min_mps", "v_min must be non-negative");
  require(finite(cfg.v_max_mps) && cfg.v_max_mps > 0, "v_max_mps", "v_max must be positive");
  require(cfg.v_min_mps <= cfg.v_max_mps, "v_min_mps", "v_min must not exceed v_max");
  require(finite(cfg.altitude_m) && cfg.altitude_m > 0, "altitude_m", "altitude_m must be positive");
  require(finite(cfg.orbit_radius_m) && cfg.orbit_radius_m > 0, "orbit_radius_m",
          "orbit_radius_m must be positive");
  const auto [cx, cy] = cfg.orbit_center;
  require(finite(cx) && finite(cy), "orbit_center", "orbit_center must be finite");
  const double r = cfg.orbit_radius_m;
  require(cx - r >= 0 && cx + r <= cfg.area_size_m && cy - r >= 0 && cy + r <= cfg.area_size_m,
          "orbit_radius_m", "orbit exits area");
  require(finite(cfg.ptx_dbm), "ptx_dbm", "ptx_dbm must be finite");
  require(finite(cfg.noise_dbm), "noise_dbm", "noise_dbm must be finite");
  require(finite(cfg.env_a) && cfg.env_a > 0, "env_a", "env_a must be positive");
  require(finite(cfg.env_b) && cfg.env_b > 0, "env_b", "env_b must be positive");
  require(finite(cfg.eta_los_db), "eta_los_db", "eta_los_db must be finite");
  require(finite(cfg.eta_nlos_db), "eta_nlos_db", "eta_nlos_db must be finite");
  require(finite(cfg.carrier_hz) && cfg.carrier_hz > 0, "carrier_hz", "carrier_hz must be positive");
  require(finite(cfg.light_speed_mps) && cfg.light_speed_mps > 0, "light_speed_mps",
          "light_speed_mps must be positive");
  require(finite(cfg.snr_threshold_db), "snr_threshold_db", "snr_threshold_db must be finite");
  require(finite(cfg.logistic_scale_db) && cfg.logistic_scale_db > 0, "logistic_scale_db",
          "logistic_scale_db must be positive");
  require(cfg.queue_cap >= 1, "queue_cap", "queue_cap must be at least 1");
  require(finite(cfg.battery_j) && cfg.battery_j > 0, "battery_j", "battery_j must be positive");
  require(finite(cfg.e_tx_j) && cfg.e_tx_j > 0, "e_tx_j", "e_tx_j must be positive");
  if (cfg.aoi_cap_s) {
    require(finite(*cfg.aoi_cap_s) && *cfg.aoi_cap_s > 0, "aoi_cap_s", "aoi_cap_s must be positive");
  }
  return cfg;
}

// JSON form: a flat object keyed by the field names above. orbit_center is a
// two-element array, success_model a string, aoi_cap_s a number or null.

inline nlohmann::json to_json(const WorldConfig& c) {
  nlohmann::json j;
  j["area_size_m"] = c.area_size_m;
  j["n_sensors"] = c.n_sensors;
  j["n_steps"] = c.n_steps;
  j["dt_s"] = c.dt_s;
  j["v_min_mps"] = c.v_min_mps;
  j["v_max_mps"] = c.v_max_mps;
  j["altitude_m"] = c.altitude_m;
  j["orbit_radius_m"] = c.orbit_radius_m;
  j["orbit_center"] = {c.orbit_center.x, c.orbit_center.y};
  j["ptx_dbm"] = c.ptx_dbm;
  j["noise_dbm"] = c.noise_dbm;
  j["env_a"] = c.env_a;
  j["env_b"] = c.env_b;
  j["eta_los_db"] = c.eta_los_db;
  j["eta_nlos_db"] = c.eta_nlos_db;
  j["carrier_hz"] = c.carrier_hz;
  j["light_speed_mps"] = c.light_speed_mps;
  j["success_model"] = std::string(to_string(c.success_model));
  j["snr_threshold_db"] = c.snr_threshold_db;
  j["logistic_scale_db"] = c.logistic_scale_db;
  j["queue_cap"] = c.queue_cap;
  j["battery_j"] = c.battery_j;
  j["e_tx_j"] = c.e_tx_j;
  j["aoi_cap_s"] = c.aoi_cap_s ? nlohmann::json(*c.aoi_cap_s) : nlohmann::json(nullptr);
  j["seed"] = c.seed;
  return j;
}

namespace detail {

inline double get_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, key + " must be a number");
  return v.get<double>();
}

inline std::size_t get_count(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(key, key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace detail

/// Overlays the keys present in j onto base. Unknown keys and mistyped values
/// are errors; absent keys keep base's value. The result is not validated.
inline WorldConfig config_from_json(const nlohmann::json& j, WorldConfig base = {}) {
  using detail::get_count;
  using detail::get_number;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  WorldConfig c = std::move(base);
  for (const auto& [key, v] : j.items()) {
    if (key == "area_size_m") c.area_size_m = get_number(v, key);
    else if (key == "n_sensors") c.n_sensors = get_count(v, key);
    else if (key == "n_steps") c.n_steps = get_count(v, key);
    else if (key == "dt_s") c.dt_s = get_number(v, key);
    else if (key == "v_min_mps") c.v_min_mps = get_number(v, key);
    else if (key == "v_max_mps") c.v_max_mps = get_number(v, key);
    else if (key == "altitude_m") c.altitude_m = get_number(v, key);
    else if (key == "orbit_radius_m") c.orbit_radius_m = get_number(v, key);
    else if (key == "orbit_center") {
      if (!v.is_array() || v.size() != 2) throw ConfigError(key, "orbit_center must be [x, y]");
      c.orbit_center = {get_number(v[0], key), get_number(v[1], key)};
    } else if (key == "ptx_dbm") c.ptx_dbm = get_number(v, key);
    else if (key == "noise_dbm") c.noise_dbm = get_number(v, key);
    else if (key == "env_a") c.env_a = get_number(v, key);
    else if (key == "env_b") c.env_b = get_number(v, key);
    else if (key == "eta_los_db") c.eta_los_db = get_number(v, key);
    else if (key == "eta_nlos_db") c.eta_nlos_db = get_number(v, key);
    else if (key == "carrier_hz") c.carrier_hz = get_number(v, key);
    else if (key == "light_speed_mps") c.light_speed_mps = get_number(v, key);
    else if (key == "success_model") {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "threshold") c.success_model = SuccessModel::threshold;
      else if (s == "logistic") c.success_model = SuccessModel::logistic;
      else throw ConfigError(key, "success_model must be \"threshold\" or \"logistic\"");
    } else if (key == "snr_threshold_db") c.snr_threshold_db = get_number(v, key);
    else if (key == "logistic_scale_db") c.logistic_scale_db = get_number(v, key);
    else if (key == "queue_cap") c.queue_cap = get_count(v, key);
    else if (key == "battery_j") c.battery_j = get_number(v, key);
    else if (key == "e_tx_j") c.e_tx_j = get_number(v, key);
    else if (key == "aoi_cap_s") {
      if (v.is_null()) c.aoi_cap_s.reset();
      else c.aoi_cap_s = get_number(v, key);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError(key, "seed must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError(key, "unknown config key \"" + key + "\"");
    }
  }
  return c;
}

}  // namespace frsicl
