#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "frsicl/geometry.hpp"

namespace frsicl {

/// Sensor ids are 1-based everywhere outside of vector indexing.
struct SensorState {
  std::size_t id = 1;
  Vec2 pos;
  double aoi_s = 0.0;
  double last_gen_s = 0.0;
  std::size_t queue_len = 0;
  double battery_j = 0.0;
  bool operator==(const SensorState&) const = default;
};

struct UavState {
  Vec3 pos;
  double arc_s = 0.0;  // metres flown along the orbit
  double velocity_mps = 0.0;
  bool operator==(const UavState&) const = default;
};

struct Action {
  std::size_t sensor = 1;
  double velocity_mps = 0.0;
  bool operator==(const Action&) const = default;
};

struct SensorRow {
  std::size_t id = 1;
  double aoi_s = 0.0;
  double distance_m = 0.0;  // horizontal distance to the UAV
  double path_loss_db = 0.0;
  double snr_db = 0.0;
  std::size_t queue_len = 0;
  double battery_j = 0.0;
  bool eligible = false;
};

/// Frame-start snapshot handed to a policy.
struct Observation {
  double t_s = 0.0;
  std::size_t step = 0;
  std::size_t steps_remaining = 0;
  Vec3 uav_pos;
  double orbit_angle_rad = 0.0;
  std::vector<SensorRow> rows;
};

struct StepRecord {
  std::size_t step = 0;
  Action action;  // after velocity clamping
  bool success = false;
  double avg_aoi_s = 0.0;
  std::vector<double> per_sensor_aoi;
  bool operator==(const StepRecord&) const = default;
};

struct RunSummary {
  std::string run_id;
  double time_avg_aoi_s = 0.0;
  std::vector<double> per_sensor_mean_aoi;
  std::vector<double> per_sensor_final_aoi;
  std::vector<double> velocity_trace;
  std::size_t success_count = 0;
  double success_rate = 0.0;
  double wall_ms = 0.0;
  std::vector<StepRecord> steps;
};

}  // namespace frsicl
