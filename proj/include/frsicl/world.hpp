#pragma once

// The discrete-time world. One frame is: clamp velocity, move along the
// circular orbit, address exactly one sensor (beacon -> data -> ack), update
// every sensor's age of information, advance the clock, log the frame.
//
// Sensors sample at will: a successful collection delivers a measurement
// generated at the frame start, so the collected sensor's AoI becomes dt.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frsicl/channel.hpp"
#include "frsicl/config.hpp"
#include "frsicl/rng.hpp"
#include "frsicl/types.hpp"

namespace frsicl {

class HorizonError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct World {
  WorldConfig cfg;
  double t_s = 0.0;
  std::size_t step_index = 0;
  UavState uav;
  std::vector<SensorState> sensors;
  RngStream rng;  // link-success draws
  std::vector<StepRecord> log;

  bool done() const noexcept { return step_index >= cfg.n_steps; }
};

inline Vec3 orbit_position(const WorldConfig& cfg, double arc_m) {
  const double theta = arc_m / cfg.orbit_radius_m;
  return {cfg.orbit_center.x + cfg.orbit_radius_m * std::cos(theta),
          cfg.orbit_center.y + cfg.orbit_radius_m * std::sin(theta), cfg.altitude_m};
}

inline double clamp_velocity(double v, const WorldConfig& cfg) {
  if (std::isnan(v)) return cfg.v_min_mps;
  return std::clamp(v, cfg.v_min_mps, cfg.v_max_mps);
}

/// Sensors uniform on [0, area]^2 from the "layout" stream of seed; link
/// draws come from the independent "link" stream.
inline World init_world(const WorldConfig& cfg_in, std::uint64_t seed) {
  World w;
  w.cfg = validate_config(cfg_in);
  w.cfg.seed = seed;
  RngStream layout(seed, "layout");
  w.sensors.reserve(w.cfg.n_sensors);
  for (std::size_t j = 0; j < w.cfg.n_sensors; ++j) {
    SensorState s;
    s.id = j + 1;
    s.pos.x = layout.uniform(0.0, w.cfg.area_size_m);
    s.pos.y = layout.uniform(0.0, w.cfg.area_size_m);
    s.battery_j = w.cfg.battery_j;
    w.sensors.push_back(s);
  }
  w.uav.arc_s = 0.0;
  w.uav.pos = orbit_position(w.cfg, 0.0);
  w.uav.velocity_mps = w.cfg.v_min_mps;
  w.rng = RngStream(seed, "link");
  return w;
}

inline World init_world(const WorldConfig& cfg) { return init_world(cfg, cfg.seed); }

/// Moves the UAV one frame at the given (already clamped) speed.
inline const UavState& advance_uav(World& w, double velocity_mps) {
  w.uav.velocity_mps = velocity_mps;
  w.uav.arc_s += velocity_mps * w.cfg.dt_s;
  w.uav.pos = orbit_position(w.cfg, w.uav.arc_s);
  return w.uav;
}

inline bool sensor_can_transmit(const SensorState& s, const WorldConfig& cfg) {
  return s.battery_j >= cfg.e_tx_j;
}

/// One beacon/data/ack exchange with sensor_id at the UAV's current position.
/// An eligible sensor always spends e_tx_j; an ineligible one is untouched.
inline bool attempt_collection(World& w, std::size_t sensor_id) {
  if (sensor_id < 1 || sensor_id > w.sensors.size()) {
    throw std::out_of_range("sensor id " + std::to_string(sensor_id) + " out of range");
  }
  SensorState& s = w.sensors[sensor_id - 1];
  if (!sensor_can_transmit(s, w.cfg)) return false;
  const double p = link_budget(w.uav.pos, s.pos, w.cfg).success_p;
  const double u = w.rng.uniform();
  s.battery_j = std::max(0.0, s.battery_j - w.cfg.e_tx_j);
  return u < p;
}

/// Applies one frame of ageing. Must run once per frame, after
/// attempt_collection and before the clock advances.
inline void update_aoi(World& w, std::size_t selected, bool success) {
  const double frame_start = w.t_s;
  for (SensorState& s : w.sensors) {
    s.queue_len = std::min(s.queue_len + 1, w.cfg.queue_cap);
    if (success && s.id == selected) {
      s.last_gen_s = frame_start;
      s.aoi_s = w.cfg.dt_s;
      s.queue_len = 0;
    } else {
      s.aoi_s += w.cfg.dt_s;
    }
    if (w.cfg.aoi_cap_s) s.aoi_s = std::min(s.aoi_s, *w.cfg.aoi_cap_s);
  }
}

inline double average_aoi(const World& w) {
  double sum = 0.0;
  for (const SensorState& s : w.sensors) sum += s.aoi_s;
  return sum / static_cast<double>(w.sensors.size());
}

inline StepRecord step(World& w, const Action& action) {
  if (w.done()) {
    throw HorizonError("step " + std::to_string(w.step_index + 1) + " is beyond the horizon of " +
                       std::to_string(w.cfg.n_steps) + " steps");
  }
  if (action.sensor < 1 || action.sensor > w.sensors.size()) {
    throw std::out_of_range("action sensor " + std::to_string(action.sensor) + " out of range");
  }
  const double v = clamp_velocity(action.velocity_mps, w.cfg);
  advance_uav(w, v);
  const bool success = attempt_collection(w, action.sensor);
  update_aoi(w, action.sensor, success);
  ++w.step_index;
  w.t_s = static_cast<double>(w.step_index) * w.cfg.dt_s;

  StepRecord rec;
  rec.step = w.step_index;
  rec.action = {action.sensor, v};
  rec.success = success;
  rec.per_sensor_aoi.reserve(w.sensors.size());
  for (const SensorState& s : w.sensors) rec.per_sensor_aoi.push_back(s.aoi_s);
  rec.avg_aoi_s = average_aoi(w);
  w.log.push_back(rec);
  return rec;
}

inline Observation observe(const World& w) {
  Observation obs;
  obs.t_s = w.t_s;
  obs.step = w.step_index;
  obs.steps_remaining = w.cfg.n_steps - std::min(w.step_index, w.cfg.n_steps);
  obs.uav_pos = w.uav.pos;
  obs.orbit_angle_rad = std::atan2(w.uav.pos.y - w.cfg.orbit_center.y, w.uav.pos.x - w.cfg.orbit_center.x);
  obs.rows.reserve(w.sensors.size());
  for (const SensorState& s : w.sensors) {
    const LinkBudget lb = link_budget(w.uav.pos, s.pos, w.cfg);
    SensorRow row;
    row.id = s.id;
    row.aoi_s = s.aoi_s;
    row.distance_m = lb.distance_m;
    row.path_loss_db = lb.path_loss_db;
    row.snr_db = lb.snr_db;
    row.queue_len = s.queue_len;
    row.battery_j = s.battery_j;
    row.eligible = sensor_can_transmit(s, w.cfg) &&
                   (w.cfg.success_model == SuccessModel::logistic || lb.snr_db >= w.cfg.snr_threshold_db);
    obs.rows.push_back(row);
  }
  return obs;
}

/// Anything that maps an observation to an action. decide must be total.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Action decide(const Observation& obs, RngStream& rng) = 0;
  /// Called after every frame with the observation the action was chosen on.
  virtual void feedback(const Observation&, const Action&, const StepRecord&) {}
  /// Called once when an episode ends.
  virtual void notify(const RunSummary&) {}
  /// Clears per-episode state.
  virtual void reset() {}
};

/// Exact statistics of a finished log.
inline RunSummary summarize(const World& w, std::string run_id = {}) {
  RunSummary sum;
  sum.run_id = std::move(run_id);
  sum.steps = w.log;
  const std::size_t n = w.sensors.size();
  sum.per_sensor_mean_aoi.assign(n, 0.0);
  sum.per_sensor_final_aoi.assign(n, 0.0);
  double total = 0.0;
  for (const StepRecord& rec : w.log) {
    total += rec.avg_aoi_s;
    for (std::size_t j = 0; j < n; ++j) sum.per_sensor_mean_aoi[j] += rec.per_sensor_aoi[j];
    sum.velocity_trace.push_back(rec.action.velocity_mps);
    if (rec.success) ++sum.success_count;
  }
  const double steps = static_cast<double>(w.log.size());
  if (!w.log.empty()) {
    sum.time_avg_aoi_s = total / steps;
    for (double& m : sum.per_sensor_mean_aoi) m /= steps;
    sum.per_sensor_final_aoi = w.log.back().per_sensor_aoi;
    sum.success_rate = static_cast<double>(sum.success_count) / steps;
  }
  return sum;
}

/// Drives observe -> decide -> step until the horizon. The policy stream is
/// separate from the world's link stream so policies cannot perturb the channel.
inline RunSummary run_episode(World& w, Policy& policy, RngStream& policy_rng, std::string run_id = {}) {
  const auto start = std::chrono::steady_clock::now();
  policy.reset();
  while (!w.done()) {
    const Observation obs = observe(w);
    const Action action = policy.decide(obs, policy_rng);
    const StepRecord rec = step(w, action);
    policy.feedback(obs, rec.action, rec);
  }
  RunSummary sum = summarize(w, std::move(run_id));
  sum.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  policy.notify(sum);
  return sum;
}

inline RunSummary run_episode(World& w, Policy& policy) {
  RngStream rng(w.cfg.seed, "policy");
  return run_episode(w, policy, rng);
}

/// The velocity grid shared by the discrete-velocity searches and PPO:
/// {0, 1/4, 1/2, 3/4, 1} * v_max, clamped into [v_min, v_max].
inline std::vector<double> velocity_bins(const WorldConfig& cfg, std::size_t n_bins = 5) {
  std::vector<double> bins(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double frac = n_bins == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(n_bins - 1);
    bins[k] = clamp_velocity(frac * cfg.v_max_mps, cfg);
  }
  return bins;
}

struct ScheduleSearchResult {
  double best_time_avg_aoi = std::numeric_limits<double>::infinity();
  std::vector<Action> best_schedule;
  std::size_t schedules_evaluated = 0;
};

/// Exhaustive search over every (sensor, velocity) sequence to the horizon,
/// by depth-first copies of the world. Ties keep the lexicographically first
/// schedule. Optional visitor sees every complete schedule and its value.
inline ScheduleSearchResult search_optimal_schedule(
    const World& start, std::span<const double> velocities,
    const std::function<void(std::span<const Action>, double)>& visit = {}) {
  ScheduleSearchResult result;
  std::vector<Action> prefix;
  const std::size_t n = start.sensors.size();

  std::function<void(const World&, double)> dfs = [&](const World& w, double aoi_sum) {
    if (w.done()) {
      const double value = aoi_sum / static_cast<double>(w.log.size());
      ++result.schedules_evaluated;
      if (visit) visit(prefix, value);
      if (value < result.best_time_avg_aoi) {
        result.best_time_avg_aoi = value;
        result.best_schedule = prefix;
      }
      return;
    }
    for (std::size_t sensor = 1; sensor <= n; ++sensor) {
      for (double v : velocities) {
        World next = w;
        const StepRecord rec = step(next, Action{sensor, v});
        prefix.push_back(rec.action);
        dfs(next, aoi_sum + rec.avg_aoi_s);
        prefix.pop_back();
      }
    }
  };
  double prior = 0.0;
  for (const StepRecord& rec : start.log) prior += rec.avg_aoi_s;
  dfs(start, prior);
  return result;
}

}  // namespace frsicl
