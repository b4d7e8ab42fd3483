#pragma once

// Non-learning baselines. Ties always go to the lowest sensor id.

#include <cstddef>
#include <string>

#include "frsicl/world.hpp"

namespace frsicl {

namespace detail {

inline bool any_eligible(const Observation& obs) {
  for (const SensorRow& r : obs.rows) {
    if (r.eligible) return true;
  }
  return false;
}

}  // namespace detail

/// Closest sensor by horizontal distance, among eligible sensors when any are.
inline Action nearest_neighbor_decide(const Observation& obs, const WorldConfig& cfg) {
  const bool filter = detail::any_eligible(obs);
  const SensorRow* best = nullptr;
  for (const SensorRow& r : obs.rows) {
    if (filter && !r.eligible) continue;
    if (best == nullptr || r.distance_m < best->distance_m) best = &r;
  }
  return {best ? best->id : 1, cfg.v_max_mps};
}

/// Stalest sensor, among eligible sensors when any are.
inline Action max_aoi_decide(const Observation& obs, const WorldConfig& cfg) {
  const bool filter = detail::any_eligible(obs);
  const SensorRow* best = nullptr;
  for (const SensorRow& r : obs.rows) {
    if (filter && !r.eligible) continue;
    if (best == nullptr || r.aoi_s > best->aoi_s) best = &r;
  }
  return {best ? best->id : 1, cfg.v_max_mps};
}

class NearestNeighborPolicy final : public Policy {
 public:
  explicit NearestNeighborPolicy(WorldConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "nearest"; }
  Action decide(const Observation& obs, RngStream&) override { return nearest_neighbor_decide(obs, cfg_); }

 private:
  WorldConfig cfg_;
};

class MaxAoiPolicy final : public Policy {
 public:
  explicit MaxAoiPolicy(WorldConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "maxaoi"; }
  Action decide(const Observation& obs, RngStream&) override { return max_aoi_decide(obs, cfg_); }

 private:
  WorldConfig cfg_;
};

/// Cycles 1, 2, ..., N at half the maximum speed; ignores eligibility.
class RoundRobinPolicy final : public Policy {
 public:
  explicit RoundRobinPolicy(WorldConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "roundrobin"; }

  Action decide(const Observation& obs, RngStream&) override {
    const std::size_t n = obs.rows.empty() ? cfg_.n_sensors : obs.rows.size();
    const Action a{(counter_ % n) + 1, clamp_velocity(cfg_.v_max_mps / 2.0, cfg_)};
    ++counter_;
    return a;
  }
  void reset() override { counter_ = 0; }
  std::size_t counter() const noexcept { return counter_; }

 private:
  WorldConfig cfg_;
  std::size_t counter_ = 0;
};

}  // namespace frsicl
