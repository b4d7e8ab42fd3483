#pragma once

// Experiment plumbing: JSON config loading, replicate runs with CSV output,
// the sensor-count sweep and replay verification of a finished run.
//
// Output directory layout after run_experiment:
//   config.json      world configuration (replay input)
//   steps.csv        run_id,step,selected_sensor,velocity_mps,success,avg_aoi_s
//   sensors.csv      run_id,sensor_id,x_m,y_m,mean_aoi_s,final_aoi_s
//   summary.csv      run_id,policy,n_sensors,seed,time_avg_aoi_s,success_rate,wall_ms
//   exchanges.jsonl  one line per LLM attempt (icl policy only)

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "frsicl/config.hpp"
#include "frsicl/csv.hpp"
#include "frsicl/icl/controller.hpp"
#include "frsicl/policies.hpp"
#include "frsicl/ppo/io.hpp"
#include "frsicl/ppo/ppo.hpp"
#include "frsicl/world.hpp"

namespace frsicl {

inline constexpr const char* kStepsHeader = "run_id,step,selected_sensor,velocity_mps,success,avg_aoi_s";
inline constexpr const char* kSensorsHeader = "run_id,sensor_id,x_m,y_m,mean_aoi_s,final_aoi_s";
inline constexpr const char* kSummaryHeader = "run_id,policy,n_sensors,seed,time_avg_aoi_s,success_rate,wall_ms";
inline constexpr const char* kSweepHeader = "n_sensors,policy,mean_aoi_s,std_aoi_s,n_runs";
inline constexpr std::size_t kDefaultReplicates = 10;

/// Bad input from the user: maps to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyKind { icl, ppo, nearest, roundrobin, maxaoi };

inline std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::icl: return "icl";
    case PolicyKind::ppo: return "ppo";
    case PolicyKind::nearest: return "nearest";
    case PolicyKind::roundrobin: return "roundrobin";
    case PolicyKind::maxaoi: return "maxaoi";
  }
  return "unknown";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
  for (PolicyKind p : {PolicyKind::icl, PolicyKind::ppo, PolicyKind::nearest, PolicyKind::roundrobin,
                       PolicyKind::maxaoi}) {
    if (s == to_string(p)) return p;
  }
  throw ValidationError("unknown policy \"" + s + "\" (expected icl, ppo, nearest, roundrobin or maxaoi)");
}

struct ExperimentSpec {
  WorldConfig world;
  PolicyKind policy = PolicyKind::maxaoi;
  icl::IclConfig icl;
  std::string ppo_params_path;
  bool ppo_greedy = true;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";
};

/// seeds base, base+1, ..., base+n-1
inline std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = base + i;
  return out;
}

inline void validate(const ExperimentSpec& spec) {
  try {
    validate_config(spec.world);
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  if (spec.seeds.empty()) throw ValidationError("at least one seed is required");
  if (std::set<std::uint64_t>(spec.seeds.begin(), spec.seeds.end()).size() != spec.seeds.size()) {
    throw ValidationError("replicate seeds must be distinct");
  }
  if (spec.out_dir.empty()) throw ValidationError("output directory must not be empty");
  if (spec.policy == PolicyKind::icl) {
    try {
      icl::validate(spec.icl);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  }
  if (spec.policy == PolicyKind::ppo && spec.ppo_params_path.empty()) {
    throw ValidationError("the ppo policy needs trained parameters (--ppo-params)");
  }
}

// ---------------------------------------------------------------------------
// Config files

namespace detail {

inline std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses config JSON text. Absent keys keep the defaults; besides the world
/// keys, "policy" (string) and "seeds" (array of integers) are accepted.
inline ExperimentSpec parse_config(const std::string& text, const std::string& origin = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ValidationError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON parse error: " + e.what());
  }
  if (!j.is_object()) throw ValidationError(origin + ": config must be a JSON object");
  ExperimentSpec spec;
  if (j.contains("policy")) {
    if (!j["policy"].is_string()) throw ValidationError(origin + ": policy must be a string");
    spec.policy = parse_policy_kind(j["policy"].get<std::string>());
    j.erase("policy");
  }
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    if (!s.is_array()) throw ValidationError(origin + ": seeds must be an array of non-negative integers");
    spec.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) throw ValidationError(origin + ": seeds must be non-negative integers");
      spec.seeds.push_back(v.get<std::uint64_t>());
    }
    j.erase("seeds");
  }
  try {
    spec.world = validate_config(config_from_json(j));
  } catch (const ConfigError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  if (spec.seeds == std::vector<std::uint64_t>{0}) spec.seeds = {spec.world.seed};
  return spec;
}

inline ExperimentSpec load_config(const std::string& path) { return parse_config(detail::read_file(path), path); }

// ---------------------------------------------------------------------------
// Runs

inline std::string run_id_for(PolicyKind p, std::size_t n_sensors, std::uint64_t seed) {
  return std::string(to_string(p)) + "-n" + std::to_string(n_sensors) + "-s" + std::to_string(seed);
}

inline std::unique_ptr<Policy> make_policy(const ExperimentSpec& spec, const WorldConfig& world) {
  switch (spec.policy) {
    case PolicyKind::nearest: return std::make_unique<NearestNeighborPolicy>(world);
    case PolicyKind::maxaoi: return std::make_unique<MaxAoiPolicy>(world);
    case PolicyKind::roundrobin: return std::make_unique<RoundRobinPolicy>(world);
    case PolicyKind::icl: return std::make_unique<icl::IclController>(spec.icl, world);
    case PolicyKind::ppo: {
      try {
        return std::make_unique<ppo::PpoPolicy>(ppo::load_params(spec.ppo_params_path), world, spec.ppo_greedy);
      } catch (const ppo::ShapeError& e) {
        throw ValidationError(e.what());
      } catch (const ppo::FormatError& e) {
        throw ValidationError(spec.ppo_params_path + ": " + e.what());
      }
    }
  }
  throw ValidationError("unknown policy");
}

struct RunRecord {
  RunSummary summary;
  std::uint64_t seed = 0;
  std::vector<Vec2> sensor_positions;
  std::size_t fallbacks = 0;  // icl only
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
};

/// One episode per seed, without writing anything.
inline RunRecord run_single(const ExperimentSpec& spec, const WorldConfig& world, std::uint64_t seed,
                            std::vector<icl::ExchangeRecord>* exchanges = nullptr) {
  World w = init_world(world, seed);
  std::unique_ptr<Policy> policy = make_policy(spec, w.cfg);
  RngStream rng(seed, "policy");
  RunRecord rec;
  rec.seed = seed;
  rec.summary = run_episode(w, *policy, rng, run_id_for(spec.policy, world.n_sensors, seed));
  for (const SensorState& s : w.sensors) rec.sensor_positions.push_back(s.pos);
  if (auto* ctl = dynamic_cast<icl::IclController*>(policy.get())) {
    rec.fallbacks = ctl->fallbacks();
    if (exchanges) exchanges->insert(exchanges->end(), ctl->exchanges().begin(), ctl->exchanges().end());
  }
  return rec;
}

inline void write_steps_csv(const std::vector<RunRecord>& runs, const std::string& path) {
  CsvWriter out(path, kStepsHeader);
  for (const RunRecord& r : runs) {
    for (const StepRecord& s : r.summary.steps) {
      out.row(r.summary.run_id, s.step, s.action.sensor, s.action.velocity_mps, s.success, s.avg_aoi_s);
    }
  }
}

inline void write_sensors_csv(const std::vector<RunRecord>& runs, const std::string& path) {
  CsvWriter out(path, kSensorsHeader);
  for (const RunRecord& r : runs) {
    for (std::size_t j = 0; j < r.sensor_positions.size(); ++j) {
      out.row(r.summary.run_id, j + 1, r.sensor_positions[j].x, r.sensor_positions[j].y,
              r.summary.per_sensor_mean_aoi[j], r.summary.per_sensor_final_aoi[j]);
    }
  }
}

inline void write_summary_csv(const std::vector<RunRecord>& runs, PolicyKind policy, std::size_t n_sensors,
                              const std::string& path) {
  CsvWriter out(path, kSummaryHeader);
  for (const RunRecord& r : runs) {
    out.row(r.summary.run_id, std::string(to_string(policy)), n_sensors, r.seed, r.summary.time_avg_aoi_s,
            r.summary.success_rate, r.summary.wall_ms);
  }
}

inline void write_config_json(const WorldConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline void prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

/// Runs every seed in order and writes the output files into spec.out_dir.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  prepare_out_dir(spec.out_dir);
  const std::filesystem::path dir(spec.out_dir);
  ExperimentResult result;
  std::vector<icl::ExchangeRecord> exchanges;
  const std::string exchange_path = (dir / "exchanges.jsonl").string();
  if (spec.policy == PolicyKind::icl) std::ofstream(exchange_path, std::ios::trunc);
  for (std::uint64_t seed : spec.seeds) {
    exchanges.clear();
    result.runs.push_back(run_single(spec, spec.world, seed, &exchanges));
    if (spec.policy == PolicyKind::icl) {
      icl::append_exchange_log(exchanges, result.runs.back().summary.run_id, exchange_path);
    }
  }
  write_config_json(spec.world, (dir / "config.json").string());
  write_steps_csv(result.runs, (dir / "steps.csv").string());
  write_sensors_csv(result.runs, (dir / "sensors.csv").string());
  write_summary_csv(result.runs, spec.policy, spec.world.n_sensors, (dir / "summary.csv").string());
  return result;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  std::size_t n_sensors = 0;
  PolicyKind policy = PolicyKind::maxaoi;
  double mean_aoi_s = 0.0;
  double std_aoi_s = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t n_runs = 0;
  std::vector<double> per_run;
};

inline std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Every count x policy x seed; same seeds (hence layouts) for every policy.
/// Writes sweep.csv into spec.out_dir when write is set.
inline std::vector<SweepRow> sweep_sensors(const ExperimentSpec& base, const std::vector<std::size_t>& counts,
                                           const std::vector<PolicyKind>& policies, bool write = true) {
  if (counts.empty()) throw ValidationError("sweep needs at least one sensor count");
  if (policies.empty()) throw ValidationError("sweep needs at least one policy");
  std::vector<SweepRow> rows;
  for (std::size_t n : counts) {
    for (PolicyKind p : policies) {
      ExperimentSpec spec = base;
      spec.world.n_sensors = n;
      spec.policy = p;
      validate(spec);
      SweepRow row;
      row.n_sensors = n;
      row.policy = p;
      for (std::uint64_t seed : spec.seeds) row.per_run.push_back(run_single(spec, spec.world, seed).summary.time_avg_aoi_s);
      std::tie(row.mean_aoi_s, row.std_aoi_s) = mean_and_std(row.per_run);
      row.n_runs = row.per_run.size();
      rows.push_back(std::move(row));
    }
  }
  if (write) {
    prepare_out_dir(base.out_dir);
    CsvWriter out((std::filesystem::path(base.out_dir) / "sweep.csv").string(), kSweepHeader);
    for (const SweepRow& r : rows) {
      out.row(r.n_sensors, std::string(to_string(r.policy)), r.mean_aoi_s, r.std_aoi_s, r.n_runs);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Replay

class ReplayDivergence : public ValidationError {
 public:
  ReplayDivergence(std::string run_id, std::size_t step, const std::string& why)
      : ValidationError("replay divergence at step " + std::to_string(step) + " (run " + run_id + "): " + why),
        run_id_(std::move(run_id)),
        step_(step) {}
  const std::string& run_id() const noexcept { return run_id_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::string run_id_;
  std::size_t step_;
};

struct ReplayReport {
  std::size_t runs = 0;
  std::size_t steps = 0;
};

/// Re-simulates every run in dir/steps.csv from its logged actions and checks
/// each logged avg_aoi_s (as rendered) and success flag. Throws
/// ReplayDivergence at the first mismatch.
inline ReplayReport replay(const std::string& dir_path) {
  const std::filesystem::path dir(dir_path);
  WorldConfig cfg;
  try {
    cfg = validate_config(config_from_json(nlohmann::json::parse(detail::read_file((dir / "config.json").string()))));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError((dir / "config.json").string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ValidationError((dir / "config.json").string() + ": " + e.what());
  }

  const CsvTable summary = read_csv((dir / "summary.csv").string());
  const std::size_t s_run = summary.column("run_id");
  const std::size_t s_seed = summary.column("seed");
  std::map<std::string, std::uint64_t> seeds;
  for (const auto& row : summary.rows) seeds[row.at(s_run)] = std::stoull(row.at(s_seed));

  const CsvTable steps = read_csv((dir / "steps.csv").string());
  if (steps.header != split_csv_line(kStepsHeader)) throw ValidationError("steps.csv has an unexpected header");
  ReplayReport report;
  std::string current;
  World w;
  std::size_t line = 1;
  for (const auto& row : steps.rows) {
    ++line;
    if (row.size() != 6) throw ValidationError("steps.csv line " + std::to_string(line) + ": expected 6 fields");
    const std::string& run_id = row[0];
    std::size_t logged_step = 0;
    try {
      logged_step = std::stoul(row[1]);
    } catch (const std::exception&) {
      throw ReplayDivergence(run_id, 0, "unreadable step number on line " + std::to_string(line));
    }
    if (run_id != current) {
      const auto it = seeds.find(run_id);
      if (it == seeds.end()) throw ValidationError("run " + run_id + " missing from summary.csv");
      w = init_world(cfg, it->second);
      current = run_id;
      ++report.runs;
    }
    const std::size_t expected_step = w.step_index + 1;
    if (logged_step != expected_step) {
      throw ReplayDivergence(run_id, expected_step, "logged step number " + row[1]);
    }
    if (w.done()) throw ReplayDivergence(run_id, expected_step, "more steps than the horizon");
    Action a;
    try {
      a.sensor = std::stoul(row[2]);
      a.velocity_mps = std::stod(row[3]);
    } catch (const std::exception&) {
      throw ReplayDivergence(run_id, expected_step, "unreadable action");
    }
    if (a.sensor < 1 || a.sensor > cfg.n_sensors) throw ReplayDivergence(run_id, expected_step, "sensor out of range");
    const StepRecord rec = step(w, a);
    if (detail::csv_field(rec.success) != row[4]) {
      throw ReplayDivergence(run_id, expected_step, "success " + row[4] + " vs replayed " + detail::csv_field(rec.success));
    }
    const std::string replayed = format_number(rec.avg_aoi_s);
    if (replayed != row[5]) {
      throw ReplayDivergence(run_id, expected_step, "avg_aoi_s " + row[5] + " vs replayed " + replayed);
    }
    ++report.steps;
  }
  return report;
}

}  // namespace frsicl
