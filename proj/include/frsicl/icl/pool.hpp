#pragma once

// Experience pool: a bounded ring of (state features, action, outcome)
// records, mined by nearest-neighbour retrieval for prompt demonstrations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "frsicl/features.hpp"
#include "frsicl/types.hpp"

namespace frsicl::icl {

struct ExperienceRecord {
  FeatureVector features;
  Action action;
  double outcome_avg_aoi_s = 0.0;  // average AoI after the frame
  std::size_t step = 0;
  std::string summary;     // human-readable state digest shown in prompts
  std::uint64_t seq = 0;   // insertion number, for recency ordering
  bool operator==(const ExperienceRecord&) const = default;
};

/// Negative Euclidean distance; 0 for identical vectors, higher is closer.
inline double similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("similarity: feature lengths differ (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return -std::sqrt(s);
}

class ExperiencePool {
 public:
  explicit ExperiencePool(std::size_t capacity = 512) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("experience pool capacity must be positive");
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::deque<ExperienceRecord>& records() const noexcept { return records_; }

  /// Appends, evicting the oldest record beyond capacity.
  void add(ExperienceRecord r) {
    if (!std::isfinite(r.outcome_avg_aoi_s) || r.outcome_avg_aoi_s < 0) {
      throw std::invalid_argument("experience outcome must be finite and non-negative");
    }
    r.seq = next_seq_++;
    records_.push_back(std::move(r));
    while (records_.size() > capacity_) records_.pop_front();
  }

  bool operator==(const ExperiencePool&) const = default;

  friend nlohmann::json to_json(const ExperiencePool& pool) {
    nlohmann::json j;
    j["capacity"] = pool.capacity_;
    j["next_seq"] = pool.next_seq_;
    j["records"] = nlohmann::json::array();
    for (const ExperienceRecord& r : pool.records_) {
      j["records"].push_back({{"features", r.features},
                              {"sensor", r.action.sensor},
                              {"velocity", r.action.velocity_mps},
                              {"outcome_avg_aoi_s", r.outcome_avg_aoi_s},
                              {"step", r.step},
                              {"summary", r.summary},
                              {"seq", r.seq}});
    }
    return j;
  }

  static ExperiencePool from_json(const nlohmann::json& j) {
    ExperiencePool pool(j.at("capacity").get<std::size_t>());
    for (const auto& jr : j.at("records")) {
      ExperienceRecord r;
      r.features = jr.at("features").get<FeatureVector>();
      r.action = {jr.at("sensor").get<std::size_t>(), jr.at("velocity").get<double>()};
      r.outcome_avg_aoi_s = jr.at("outcome_avg_aoi_s").get<double>();
      r.step = jr.at("step").get<std::size_t>();
      r.summary = jr.at("summary").get<std::string>();
      r.seq = jr.at("seq").get<std::uint64_t>();
      pool.records_.push_back(std::move(r));
    }
    pool.next_seq_ = j.at("next_seq").get<std::uint64_t>();
    return pool;
  }

 private:
  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
  std::deque<ExperienceRecord> records_;
};

/// Top-k by similarity (newer wins ties), returned oldest first.
inline std::vector<ExperienceRecord> retrieve_examples(const ExperiencePool& pool, const FeatureVector& current,
                                                       std::size_t k) {
  struct Scored {
    double score;
    const ExperienceRecord* rec;
  };
  std::vector<Scored> scored;
  scored.reserve(pool.size());
  for (const ExperienceRecord& r : pool.records()) scored.push_back({similarity(r.features, current), &r});
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.rec->seq > b.rec->seq;
                    });
  scored.resize(take);
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.rec->seq < b.rec->seq; });
  std::vector<ExperienceRecord> out;
  out.reserve(take);
  for (const Scored& s : scored) out.push_back(*s.rec);
  return out;
}

}  // namespace frsicl::icl
