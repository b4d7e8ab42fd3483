#pragma once

// The in-context-learning controller. Each frame:
//
//   features <- observation
//   examples <- top-k similar records from the experience pool
//   reply    <- backend(system prompt, step prompt)       (retried on failure)
//   action   <- parse(reply), or the max-AoI fallback after max_retries retries
//
// and after the frame the (features, action, resulting avg AoI) record goes
// back into the pool. Every backend attempt is kept in the exchange log.

#include <chrono>
#include <cstddef>
#include <fstream>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "frsicl/features.hpp"
#include "frsicl/icl/backend.hpp"
#include "frsicl/icl/parse.hpp"
#include "frsicl/icl/pool.hpp"
#include "frsicl/icl/prompt.hpp"
#include "frsicl/policies.hpp"
#include "frsicl/world.hpp"

namespace frsicl::icl {

enum class BackendKind { http, mock_max_aoi, mock_nearest, mock_invalid };

inline BackendKind parse_backend_kind(const std::string& s) {
  if (s == "http") return BackendKind::http;
  if (s == "max-aoi" || s == "mock:max-aoi") return BackendKind::mock_max_aoi;
  if (s == "nearest" || s == "mock:nearest") return BackendKind::mock_nearest;
  if (s == "invalid" || s == "mock:invalid") return BackendKind::mock_invalid;
  throw std::invalid_argument("unknown LLM backend \"" + s + "\" (expected http, max-aoi, nearest or invalid)");
}

struct IclConfig {
  std::string endpoint;
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  int max_retries = 2;
  double timeout_s = 10.0;
  std::size_t top_k = 4;
  std::size_t pool_capacity = 512;
  int max_tokens = 64;
  BackendKind backend = BackendKind::http;
  std::string api_key;  // normally taken from FRSICL_API_KEY
};

inline void validate(const IclConfig& c) {
  if (c.max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
  if (c.pool_capacity == 0) throw std::invalid_argument("pool capacity must be positive");
  if (c.top_k > c.pool_capacity) throw std::invalid_argument("top_k must not exceed the pool capacity");
  if (!(c.timeout_s > 0)) throw std::invalid_argument("timeout must be positive");
  if (c.backend == BackendKind::http && c.endpoint.empty()) {
    throw std::invalid_argument("the http backend needs an endpoint (--llm-endpoint) or use --mock-llm");
  }
}

inline std::unique_ptr<ChatBackend> make_backend(const IclConfig& c) {
  switch (c.backend) {
    case BackendKind::http: return std::make_unique<HttpChatBackend>(HttpSettings{c.endpoint, c.api_key, c.timeout_s});
    case BackendKind::mock_max_aoi: return std::make_unique<MockChatBackend>(MockStrategy::max_aoi);
    case BackendKind::mock_nearest: return std::make_unique<MockChatBackend>(MockStrategy::nearest);
    case BackendKind::mock_invalid: return std::make_unique<MockChatBackend>(MockStrategy::invalid);
  }
  throw std::invalid_argument("unknown backend");
}

/// One backend attempt.
struct ExchangeRecord {
  std::size_t step = 0;  // 1-based frame number
  int attempt = 0;       // 0 = first try
  ChatRequest request;
  ChatResponse response;
  std::string parse_result;  // "ok", a parse error tag, or "backend-error:<kind>"
  std::string detail;
};

inline nlohmann::json to_json(const ExchangeRecord& e) {
  return {{"step", e.step},
          {"attempt", e.attempt},
          {"model", e.request.model},
          {"request_chars", e.request.system.size() + e.request.user.size()},
          {"raw_response", e.response.raw},
          {"parse_result", e.parse_result},
          {"detail", e.detail},
          {"latency_ms", e.response.latency_ms},
          {"prompt_tokens", e.response.prompt_tokens},
          {"completion_tokens", e.response.completion_tokens}};
}

struct DecisionOutcome {
  Action action;
  bool fallback = false;
  int attempts = 0;
};

/// Builds prompts, queries the backend with retries and falls back to the
/// max-AoI rule. Never throws for anything the backend returns.
inline DecisionOutcome icl_decide(const Observation& obs, const ExperiencePool& pool, ChatBackend& backend,
                                  const IclConfig& cfg, const WorldConfig& world_cfg, const std::string& system_prompt,
                                  std::vector<ExchangeRecord>& log) {
  const FeatureVector features = make_features(obs, world_cfg);
  const auto examples = retrieve_examples(pool, features, cfg.top_k);
  ChatRequest req{cfg.model, system_prompt, build_step_prompt(obs, examples, world_cfg), cfg.temperature,
                  cfg.max_tokens};
  DecisionOutcome out;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    ExchangeRecord rec;
    rec.step = obs.step + 1;
    rec.attempt = attempt;
    rec.request = req;
    ++out.attempts;
    const auto start = std::chrono::steady_clock::now();
    try {
      rec.response = backend.complete(req);
    } catch (const BackendError& e) {
      rec.response.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      rec.parse_result = "backend-error:" + std::string(to_string(e.kind()));
      rec.detail = e.what();
      log.push_back(std::move(rec));
      continue;
    } catch (const std::exception& e) {
      rec.parse_result = "backend-error:transport";
      rec.detail = e.what();
      log.push_back(std::move(rec));
      continue;
    }
    const ParseResult parsed = parse_action(rec.response.raw, world_cfg);
    if (const Action* a = std::get_if<Action>(&parsed)) {
      rec.parse_result = "ok";
      log.push_back(std::move(rec));
      out.action = *a;
      return out;
    }
    const ParseError& err = std::get<ParseError>(parsed);
    rec.parse_result = std::string(to_string(err.kind));
    rec.detail = err.detail;
    log.push_back(std::move(rec));
    // Corrective retries quote the grammar instead of restating the task.
    req.user = build_step_prompt(obs, examples, world_cfg) + '\n' +
               corrective_line(std::string(to_string(err.kind)) + ": " + err.detail, world_cfg);
  }
  out.fallback = true;
  out.action = max_aoi_decide(obs, world_cfg);
  return out;
}

inline void record_feedback(ExperiencePool& pool, const FeatureVector& features, const Action& action,
                            double outcome_avg_aoi, std::size_t step, std::string summary = {}) {
  ExperienceRecord r;
  r.features = features;
  r.action = action;
  r.outcome_avg_aoi_s = outcome_avg_aoi;
  r.step = step;
  r.summary = std::move(summary);
  pool.add(std::move(r));
}

class IclController final : public Policy {
 public:
  IclController(IclConfig cfg, WorldConfig world_cfg, std::unique_ptr<ChatBackend> backend)
      : cfg_(std::move(cfg)),
        world_cfg_(std::move(world_cfg)),
        backend_(std::move(backend)),
        pool_(cfg_.pool_capacity),
        system_prompt_(build_system_prompt(world_cfg_)) {
    validate(cfg_);
  }

  IclController(IclConfig cfg, WorldConfig world_cfg)
      : IclController(cfg, world_cfg, make_backend(cfg)) {}

  std::string name() const override { return "icl"; }

  Action decide(const Observation& obs, RngStream&) override {
    const DecisionOutcome d = icl_decide(obs, pool_, *backend_, cfg_, world_cfg_, system_prompt_, log_);
    ++decisions_;
    if (d.fallback) ++fallbacks_;
    return d.action;
  }

  void feedback(const Observation& obs, const Action& action, const StepRecord& rec) override {
    record_feedback(pool_, make_features(obs, world_cfg_), action, rec.avg_aoi_s, rec.step, state_summary(obs));
  }

  void reset() override {
    pool_ = ExperiencePool(cfg_.pool_capacity);
    log_.clear();
    decisions_ = 0;
    fallbacks_ = 0;
  }

  const ExperiencePool& pool() const noexcept { return pool_; }
  const std::vector<ExchangeRecord>& exchanges() const noexcept { return log_; }
  const std::string& system_prompt() const noexcept { return system_prompt_; }
  std::size_t decisions() const noexcept { return decisions_; }
  std::size_t fallbacks() const noexcept { return fallbacks_; }

 private:
  IclConfig cfg_;
  WorldConfig world_cfg_;
  std::unique_ptr<ChatBackend> backend_;
  ExperiencePool pool_;
  std::string system_prompt_;
  std::vector<ExchangeRecord> log_;
  std::size_t decisions_ = 0;
  std::size_t fallbacks_ = 0;
};

/// Appends one JSON line per exchange, tagged with the run id.
inline void append_exchange_log(const std::vector<ExchangeRecord>& log, const std::string& run_id,
                                const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const ExchangeRecord& e : log) {
    nlohmann::json j = to_json(e);
    j["run_id"] = run_id;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace frsicl::icl
