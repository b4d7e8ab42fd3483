#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "frsicl/icl/controller.hpp"

using namespace frsicl;
using namespace frsicl::icl;

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

ExperienceRecord rec(FeatureVector f, double outcome = 1.0) {
  ExperienceRecord r;
  r.features = std::move(f);
  r.action = {1, 0};
  r.outcome_avg_aoi_s = outcome;
  return r;
}

// A local HTTP server on an ephemeral port, stopped on destruction.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string completion_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                        {"usage", {{"prompt_tokens", 321}, {"completion_tokens", 9}}}}
      .dump();
}

class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  ChatResponse complete(const ChatRequest& r) override {
    requests.push_back(r);
    const std::string reply = replies_.at(std::min(calls_++, replies_.size() - 1));
    if (reply == "<timeout>") throw BackendError(BackendErrorKind::timeout, "timed out");
    ChatResponse out;
    out.raw = reply;
    return out;
  }
  std::vector<ChatRequest> requests;

 private:
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Prompts

TEST(SystemPrompt, DefaultsCarryRanges) {
  const std::string p = build_system_prompt(WorldConfig{});
  EXPECT_NE(p.find("1..10"), std::string::npos);
  EXPECT_NE(p.find("0..15"), std::string::npos);
  EXPECT_NE(p.find("30-step"), std::string::npos);
  EXPECT_NE(p.find(R"({"sensor": <integer 1..10>, "velocity": <number 0..15>})"), std::string::npos);
  EXPECT_NE(p.find("You only schedule sensor data collection and control UAV velocity"), std::string::npos);
}

TEST(SystemPrompt, FiveSectionsOnce) {
  const std::string p = build_system_prompt(WorldConfig{});
  for (const char* h : {"Objective:\n", "Input Schema:\n", "Operational Constraints:\n", "Output Requirements:\n",
                        "Feedback Mechanism:\n"}) {
    EXPECT_EQ(count_of(p, h), 1u) << h;
  }
  const TaskDescription td = build_task_description(WorldConfig{});
  for (const std::string* s : {&td.objective, &td.input_schema, &td.constraints, &td.output_requirements,
                               &td.feedback_mechanism}) {
    EXPECT_FALSE(s->empty());
  }
}

TEST(SystemPrompt, ByteStable) {
  WorldConfig c;
  c.n_sensors = 15;
  EXPECT_EQ(build_system_prompt(c), build_system_prompt(c));
  EXPECT_NE(build_system_prompt(c).find("1..15"), std::string::npos);
}

TEST(StepPrompt, ColdStartHasEmptyExampleSection) {
  const World w = init_world(WorldConfig{}, 1);
  const std::string p = build_step_prompt(observe(w), {}, w.cfg);
  const auto at = p.find(kExamplesHeader);
  ASSERT_NE(at, std::string::npos);
  EXPECT_EQ(p.substr(at + std::string(kExamplesHeader).size(), 3), "\n\nC");
  EXPECT_EQ(p.find("[1]"), std::string::npos);
}

TEST(StepPrompt, OneRowPerSensor) {
  const World w = init_world(WorldConfig{}, 1);
  const std::string p = build_step_prompt(observe(w), {}, w.cfg);
  EXPECT_EQ(parse_step_prompt(p).rows.size(), 10u);
  EXPECT_NE(p.find("Step 1 of 30"), std::string::npos);
  EXPECT_NE(p.find("30 steps remaining"), std::string::npos);
  EXPECT_NE(p.find("UAV position: x=85.00 m, y=50.00 m"), std::string::npos);
}

TEST(StepPrompt, PurePathLossRoundedToTenth) {
  World w = init_world(WorldConfig{}, 1);
  step(w, {2, 7});
  const Observation o = observe(w);
  const std::string a = build_step_prompt(o, {}, w.cfg);
  EXPECT_EQ(a, build_step_prompt(o, {}, w.cfg));
  const auto rows = parse_step_prompt(a).rows;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_NEAR(rows[j].path_loss_db, o.rows[j].path_loss_db, 0.05 + 1e-9);
    EXPECT_DOUBLE_EQ(rows[j].path_loss_db * 10, std::round(rows[j].path_loss_db * 10));
  }
}

TEST(StepPrompt, ExamplesOldestFirst) {
  const World w = init_world(WorldConfig{}, 1);
  std::vector<ExperienceRecord> ex(2);
  ex[0].summary = "first";
  ex[0].action = {3, 7.5};
  ex[0].outcome_avg_aoi_s = 2.5;
  ex[1].summary = "second";
  ex[1].action = {4, 15};
  ex[1].outcome_avg_aoi_s = 3;
  const std::string p = build_step_prompt(observe(w), ex, w.cfg);
  EXPECT_NE(p.find(R"([1] first -> {"sensor": 3, "velocity": 7.5} -> resulting avg AoI 2.5 s)"), std::string::npos);
  EXPECT_LT(p.find("[1] first"), p.find("[2] second"));
}

TEST(StepPrompt, MockTableParserRecoversAoi) {
  WorldConfig cfg;
  cfg.success_model = SuccessModel::logistic;
  World w = init_world(cfg, 6);
  RngStream pick(6, "t");
  while (!w.done()) {
    const Observation o = observe(w);
    const ParsedStepPrompt parsed = parse_step_prompt(build_step_prompt(o, {}, cfg));
    ASSERT_EQ(parsed.rows.size(), o.rows.size());
    for (std::size_t j = 0; j < o.rows.size(); ++j) {
      ASSERT_EQ(parsed.rows[j].id, o.rows[j].id);
      ASSERT_EQ(parsed.rows[j].aoi_s, o.rows[j].aoi_s);
      ASSERT_EQ(parsed.rows[j].eligible, o.rows[j].eligible);
    }
    EXPECT_EQ(parsed.v_min, 0.0);
    EXPECT_EQ(parsed.v_max, 15.0);
    step(w, {pick.uniform_index(10) + 1, 15});
  }
}

// ---------------------------------------------------------------------------
// Pool and retrieval

TEST(Similarity, Examples) {
  EXPECT_EQ(similarity({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(similarity({0, 0}, {3, 4}), -5.0);
  EXPECT_EQ(similarity({0.3, -1}, {2, 4}), similarity({2, 4}, {0.3, -1}));
  EXPECT_THROW(similarity({1}, {1, 2}), std::invalid_argument);
}

TEST(Retrieve, EmptyAndTruncation) {
  ExperiencePool pool;
  EXPECT_TRUE(retrieve_examples(pool, {0, 0}, 4).empty());
  pool.add(rec({1, 0}));
  pool.add(rec({0, 1}));
  EXPECT_EQ(retrieve_examples(pool, {0, 0}, 5).size(), 2u);
  EXPECT_TRUE(retrieve_examples(pool, {0, 0}, 0).empty());
}

TEST(Retrieve, ExactMatchRankedFirst) {
  ExperiencePool pool;
  pool.add(rec({5, 5}));
  pool.add(rec({0.5, 0.5}));
  pool.add(rec({1, 1}));
  pool.add(rec({9, 9}));
  const auto top1 = retrieve_examples(pool, {1, 1}, 1);
  ASSERT_EQ(top1.size(), 1u);
  EXPECT_EQ(top1[0].features, (FeatureVector{1, 1}));
  const auto top2 = retrieve_examples(pool, {1, 1}, 2);
  ASSERT_EQ(top2.size(), 2u);
  EXPECT_EQ(top2[0].features, (FeatureVector{0.5, 0.5}));  // chronological
  EXPECT_EQ(top2[1].features, (FeatureVector{1, 1}));
}

TEST(Retrieve, TiesFavourNewer) {
  ExperiencePool pool;
  pool.add(rec({1, 0}, 1));
  pool.add(rec({0, 1}, 2));
  pool.add(rec({-1, 0}, 3));
  const auto r = retrieve_examples(pool, {0, 0}, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].outcome_avg_aoi_s, 2);
  EXPECT_EQ(r[1].outcome_avg_aoi_s, 3);
}

TEST(Retrieve, MatchesSortOracle) {
  RngStream r(3, "retrieve");
  for (int trial = 0; trial < 200; ++trial) {
    ExperiencePool pool(64);
    const std::size_t n = r.uniform_index(100);
    for (std::size_t i = 0; i < n; ++i) pool.add(rec({r.uniform(), r.uniform(), r.uniform()}));
    const FeatureVector q{r.uniform(), r.uniform(), r.uniform()};
    const std::size_t k = r.uniform_index(10);
    std::vector<ExperienceRecord> all(pool.records().begin(), pool.records().end());
    std::stable_sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
      return similarity(a.features, q) > similarity(b.features, q);
    });
    all.resize(std::min(k, all.size()));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
    ASSERT_EQ(retrieve_examples(pool, q, k), all);
  }
}

TEST(Pool, RingEvictsOldest) {
  ExperiencePool pool(512);
  for (int i = 0; i < 513; ++i) record_feedback(pool, {double(i)}, {1, 0}, 1.0, i);
  EXPECT_EQ(pool.size(), 512u);
  EXPECT_EQ(pool.records().front().features[0], 1.0);
  EXPECT_EQ(pool.records().back().features[0], 512.0);
}

TEST(Pool, RejectsBadOutcome) {
  ExperiencePool pool;
  EXPECT_THROW(pool.add(rec({0}, -1)), std::invalid_argument);
  EXPECT_THROW(pool.add(rec({0}, std::nan(""))), std::invalid_argument);
}

TEST(Pool, JsonRoundTrip) {
  ExperiencePool pool(8);
  for (int i = 0; i < 11; ++i) record_feedback(pool, {0.1 * i, -0.3}, {std::size_t(i % 3 + 1), 1.5 * i}, i, i, "s");
  const ExperiencePool back = ExperiencePool::from_json(nlohmann::json::parse(to_json(pool).dump()));
  EXPECT_EQ(back, pool);
}

TEST(Feedback, StoresPostStepAverage) {
  IclConfig cfg;
  cfg.backend = BackendKind::mock_max_aoi;
  IclController ctl(cfg, WorldConfig{});
  World w = init_world(WorldConfig{}, 2);
  const RunSummary s = run_episode(w, ctl);
  ASSERT_EQ(ctl.pool().size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(ctl.pool().records()[i].outcome_avg_aoi_s, s.steps[i].avg_aoi_s);
    EXPECT_EQ(ctl.pool().records()[i].step, i + 1);
  }
}

// ---------------------------------------------------------------------------
// Parsing

TEST(Parse, PlainObject) {
  const auto r = parse_action(R"({"sensor": 3, "velocity": 12.5})", WorldConfig{});
  ASSERT_TRUE(std::holds_alternative<Action>(r));
  EXPECT_EQ(std::get<Action>(r).sensor, 3u);
  EXPECT_EQ(std::get<Action>(r).velocity_mps, 12.5);
}

TEST(Parse, ProseSkippedVelocityClamped) {
  const auto r = parse_action(R"(I choose {"sensor": 7, "velocity": 99} because it is stale.)", WorldConfig{});
  ASSERT_TRUE(std::holds_alternative<Action>(r));
  EXPECT_EQ(std::get<Action>(r).sensor, 7u);
  EXPECT_EQ(std::get<Action>(r).velocity_mps, 15.0);
}

TEST(Parse, ErrorKinds) {
  const WorldConfig c;
  auto kind = [&](std::string_view s) {
    const auto r = parse_action(s, c);
    return std::holds_alternative<ParseError>(r) ? std::get<ParseError>(r).kind : ParseErrorKind(-1);
  };
  EXPECT_EQ(kind("sensor five please"), ParseErrorKind::no_object_found);
  EXPECT_EQ(kind(R"({"sensor": 3)"), ParseErrorKind::no_object_found);
  EXPECT_EQ(kind(R"({"velocity": 3})"), ParseErrorKind::missing_field);
  EXPECT_EQ(kind(R"({"sensor": 3})"), ParseErrorKind::missing_field);
  EXPECT_EQ(kind(R"({"sensor": 0, "velocity": 3})"), ParseErrorKind::sensor_out_of_range);
  EXPECT_EQ(kind(R"({"sensor": 11, "velocity": 3})"), ParseErrorKind::sensor_out_of_range);
  EXPECT_EQ(kind(R"({"sensor": 2.5, "velocity": 3})"), ParseErrorKind::sensor_out_of_range);
  EXPECT_EQ(kind(R"({"sensor": "2", "velocity": 3})"), ParseErrorKind::non_numeric);
  EXPECT_EQ(kind(R"({"sensor": 2, "velocity": "fast"})"), ParseErrorKind::non_numeric);
  EXPECT_EQ(kind(R"({sensor: 2, velocity: 3})"), ParseErrorKind::malformed_object);
}

TEST(Parse, FirstObjectWinsAndBracesInStringsIgnored) {
  const auto r = parse_action(R"(pick: {"why": "}{",  "sensor": 4, "velocity": 2} {"sensor": 9, "velocity": 1})",
                              WorldConfig{});
  ASSERT_TRUE(std::holds_alternative<Action>(r)) << std::get<ParseError>(r).detail;
  EXPECT_EQ(std::get<Action>(r).sensor, 4u);
}

TEST(Parse, IntegralFloatSensorAccepted) {
  const auto r = parse_action(R"({"sensor": 2.0, "velocity": -3})", WorldConfig{});
  ASSERT_TRUE(std::holds_alternative<Action>(r));
  EXPECT_EQ(std::get<Action>(r).sensor, 2u);
  EXPECT_EQ(std::get<Action>(r).velocity_mps, 0.0);
}

// ---------------------------------------------------------------------------
// Mock backend

TEST(Mock, MaxAoiPicksStalest) {
  WorldConfig cfg;
  cfg.n_sensors = 3;
  World w = init_world(cfg, 1);
  w.sensors[0].aoi_s = 3;
  w.sensors[1].aoi_s = 9;
  w.sensors[2].aoi_s = 1;
  const std::string reply = mock_complete(MockStrategy::max_aoi, build_step_prompt(observe(w), {}, cfg));
  EXPECT_EQ(reply, R"({"sensor": 2, "velocity": 15})");
}

TEST(Mock, NearestMirrorsBaseline) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    World w = init_world(WorldConfig{}, seed);
    while (!w.done()) {
      const Observation o = observe(w);
      const auto r = parse_action(mock_complete(MockStrategy::nearest, build_step_prompt(o, {}, w.cfg)), w.cfg);
      ASSERT_TRUE(std::holds_alternative<Action>(r));
      const Action expect = nearest_neighbor_decide(o, w.cfg);
      ASSERT_EQ(std::get<Action>(r).sensor, expect.sensor);
      ASSERT_EQ(std::get<Action>(r).velocity_mps, expect.velocity_mps);
      step(w, expect);
    }
  }
}

TEST(Mock, InvalidNeverParses) {
  const World w = init_world(WorldConfig{}, 1);
  const std::string reply = mock_complete(MockStrategy::invalid, build_step_prompt(observe(w), {}, w.cfg));
  EXPECT_TRUE(std::holds_alternative<ParseError>(parse_action(reply, w.cfg)));
}

// ---------------------------------------------------------------------------
// Decision loop

TEST(IclDecide, MaxAoiMockEqualsBaseline) {
  const WorldConfig cfg;
  IclConfig ic;
  MockChatBackend backend(MockStrategy::max_aoi);
  ExperiencePool pool;
  std::vector<ExchangeRecord> log;
  const std::string sys = build_system_prompt(cfg);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    World w = init_world(cfg, seed);
    while (!w.done()) {
      const Observation o = observe(w);
      const DecisionOutcome d = icl_decide(o, pool, backend, ic, cfg, sys, log);
      const Action expect = max_aoi_decide(o, cfg);
      ASSERT_FALSE(d.fallback);
      ASSERT_EQ(d.action.sensor, expect.sensor);
      ASSERT_EQ(d.action.velocity_mps, expect.velocity_mps);
      const StepRecord r = step(w, d.action);
      record_feedback(pool, make_features(o, cfg), r.action, r.avg_aoi_s, r.step);
    }
  }
}

TEST(IclDecide, InvalidMockFallsBackAfterRetries) {
  const WorldConfig cfg;
  IclConfig ic;
  ic.max_retries = 2;
  MockChatBackend backend(MockStrategy::invalid);
  std::vector<ExchangeRecord> log;
  World w = init_world(cfg, 3);
  step(w, {4, 2});
  const Observation o = observe(w);
  const DecisionOutcome d = icl_decide(o, ExperiencePool{}, backend, ic, cfg, build_system_prompt(cfg), log);
  EXPECT_TRUE(d.fallback);
  EXPECT_EQ(d.attempts, 3);
  EXPECT_EQ(d.action.sensor, max_aoi_decide(o, cfg).sensor);
  ASSERT_EQ(log.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(log[i].attempt, i);
    EXPECT_EQ(log[i].step, 2u);
    EXPECT_EQ(log[i].parse_result, "no-object-found");
    EXPECT_EQ(log[i].response.raw, mock_complete(MockStrategy::invalid, ""));
  }
}

TEST(IclDecide, CorrectiveLineOnRetryThenSuccess) {
  const WorldConfig cfg;
  IclConfig ic;
  ScriptedBackend backend({"no idea", R"({"sensor": 12, "velocity": 1})", R"({"sensor": 6, "velocity": 4})"});
  std::vector<ExchangeRecord> log;
  const World w = init_world(cfg, 3);
  const DecisionOutcome d = icl_decide(observe(w), ExperiencePool{}, backend, ic, cfg, "sys", log);
  EXPECT_FALSE(d.fallback);
  EXPECT_EQ(d.action.sensor, 6u);
  EXPECT_EQ(d.action.velocity_mps, 4.0);
  ASSERT_EQ(backend.requests.size(), 3u);
  EXPECT_EQ(backend.requests[0].user.find("Your previous reply"), std::string::npos);
  EXPECT_NE(backend.requests[1].user.find("Your previous reply could not be used (no-object-found"), std::string::npos);
  EXPECT_NE(backend.requests[2].user.find("(sensor-out-of-range"), std::string::npos);
  EXPECT_NE(backend.requests[2].user.find(output_grammar(cfg)), std::string::npos);
  EXPECT_EQ(log[2].parse_result, "ok");
}

TEST(IclDecide, TimeoutCountsAsFailedAttempt) {
  const WorldConfig cfg;
  IclConfig ic;
  ic.max_retries = 1;
  ScriptedBackend backend({"<timeout>", R"({"sensor": 2, "velocity": 3})"});
  std::vector<ExchangeRecord> log;
  const DecisionOutcome d = icl_decide(observe(init_world(cfg, 1)), ExperiencePool{}, backend, ic, cfg, "s", log);
  EXPECT_FALSE(d.fallback);
  EXPECT_EQ(d.attempts, 2);
  EXPECT_EQ(log[0].parse_result, "backend-error:timeout");
  ScriptedBackend dead({"<timeout>"});
  const DecisionOutcome f = icl_decide(observe(init_world(cfg, 1)), ExperiencePool{}, dead, ic, cfg, "s", log);
  EXPECT_TRUE(f.fallback);
}

TEST(IclDecide, ZeroRetriesMeansOneAttempt) {
  const WorldConfig cfg;
  IclConfig ic;
  ic.max_retries = 0;
  MockChatBackend backend(MockStrategy::invalid);
  std::vector<ExchangeRecord> log;
  EXPECT_EQ(icl_decide(observe(init_world(cfg, 1)), ExperiencePool{}, backend, ic, cfg, "s", log).attempts, 1);
}

TEST(IclDecide, TotalOverRandomText) {
  const WorldConfig cfg;
  IclConfig ic;
  RngStream r(77, "fuzz-unit");
  const std::string alphabet = "{}[]\":,0123456789.-+eE sensorvelocity\n\\";
  for (int i = 0; i < 200; ++i) {
    std::string s;
    const std::size_t len = r.uniform_index(80);
    for (std::size_t k = 0; k < len; ++k) {
      s += r.uniform() < 0.5 ? alphabet[r.uniform_index(alphabet.size())] : char(r.uniform_index(256));
    }
    ScriptedBackend b({s});
    std::vector<ExchangeRecord> log;
    const DecisionOutcome d = icl_decide(observe(init_world(cfg, 1)), ExperiencePool{}, b, ic, cfg, "s", log);
    ASSERT_GE(d.action.sensor, 1u);
    ASSERT_LE(d.action.sensor, 10u);
    ASSERT_GE(d.action.velocity_mps, 0.0);
    ASSERT_LE(d.action.velocity_mps, 15.0);
    ASSERT_EQ(log.front().response.raw, s);
  }
}

TEST(Controller, DeterministicEpisodeAndAuditLog) {
  IclConfig ic;
  ic.backend = BackendKind::mock_nearest;
  const WorldConfig cfg;
  IclController a(ic, cfg), b(ic, cfg);
  World wa = init_world(cfg, 5), wb = init_world(cfg, 5);
  const RunSummary sa = run_episode(wa, a), sb = run_episode(wb, b);
  ASSERT_EQ(sa.steps.size(), sb.steps.size());
  for (std::size_t i = 0; i < sa.steps.size(); ++i) {
    EXPECT_EQ(sa.steps[i].action.sensor, sb.steps[i].action.sensor);
    EXPECT_EQ(sa.steps[i].avg_aoi_s, sb.steps[i].avg_aoi_s);
  }
  EXPECT_EQ(a.exchanges().size(), 30u);
  EXPECT_EQ(a.fallbacks(), 0u);
  const nlohmann::json j = to_json(a.exchanges().front());
  for (const char* key : {"step", "attempt", "request_chars", "raw_response", "parse_result", "latency_ms"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Controller, HttpWithoutEndpointRejected) {
  EXPECT_THROW(IclController(IclConfig{}, WorldConfig{}), std::invalid_argument);
  IclConfig bad;
  bad.backend = BackendKind::mock_max_aoi;
  bad.max_retries = -1;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad.max_retries = 0;
  bad.top_k = 600;
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(BackendKindNames, Parse) {
  EXPECT_EQ(parse_backend_kind("mock:max-aoi"), BackendKind::mock_max_aoi);
  EXPECT_EQ(parse_backend_kind("nearest"), BackendKind::mock_nearest);
  EXPECT_EQ(parse_backend_kind("invalid"), BackendKind::mock_invalid);
  EXPECT_THROW(parse_backend_kind("gpt"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// HTTP client against local stub servers

TEST(Http, CannedBodyExtracted) {
  std::string seen_body, seen_auth;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    res.set_content(completion_body(R"({"sensor": 4, "velocity": 6})"), "application/json");
  });
  ChatRequest r{"test-model", "SYS", "USER", 0.0, 64};
  const ChatResponse out = http_complete(r, {server.endpoint(), "secret", 5.0});
  EXPECT_EQ(out.raw, R"({"sensor": 4, "velocity": 6})");
  EXPECT_EQ(out.prompt_tokens, 321);
  EXPECT_EQ(out.completion_tokens, 9);
  EXPECT_GE(out.latency_ms, 0.0);
  EXPECT_EQ(seen_auth, "Bearer secret");
  const auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], "SYS");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], "USER");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 64);
}

TEST(Http, NoKeyNoAuthorizationHeader) {
  bool had_auth = true;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    had_auth = req.has_header("Authorization");
    res.set_content(completion_body("x"), "application/json");
  });
  http_complete(ChatRequest{}, {server.endpoint(), "", 5.0});
  EXPECT_FALSE(had_auth);
}

TEST(Http, ServerErrorIsFailedAttempt) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  try {
    http_complete(ChatRequest{}, {server.endpoint(), "", 5.0});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::http_status);
  }
}

TEST(Http, MalformedBodyIsFailedAttempt) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices": []})", "application/json");
  });
  try {
    http_complete(ChatRequest{}, {server.endpoint(), "", 5.0});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::malformed_body);
  }
  EXPECT_THROW(extract_completion("not json"), BackendError);
}

TEST(Http, TimeoutAtConfiguredLimit) {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    res.set_content(completion_body("late"), "application/json");
  });
  const double limit_s = 0.3;
  const auto start = std::chrono::steady_clock::now();
  try {
    http_complete(ChatRequest{}, {server.endpoint(), "", limit_s});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::timeout);
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  EXPECT_NEAR(ms, limit_s * 1000, 50.0);
}

TEST(Http, UnreachableIsTransportError) {
  try {
    http_complete(ChatRequest{}, {"http://127.0.0.1:1", "", 1.0});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(e.kind(), BackendErrorKind::http_status);
  }
}

TEST(Http, EndpointSplitting) {
  EXPECT_EQ(split_endpoint("https://api.example.com/"), std::make_pair(std::string("https://api.example.com"),
                                                                        std::string("")));
  EXPECT_EQ(split_endpoint("http://h:8080/proxy/llm"), std::make_pair(std::string("http://h:8080"),
                                                                       std::string("/proxy/llm")));
  EXPECT_THROW(split_endpoint("api.example.com"), std::invalid_argument);
}

TEST(Http, ControllerDegradesToFallbackOnServerErrors) {
  std::atomic<int> calls = 0;
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  IclConfig ic;
  ic.endpoint = server.endpoint();
  WorldConfig cfg;
  cfg.n_steps = 3;
  IclController ctl(ic, cfg);
  World w = init_world(cfg, 1);
  run_episode(w, ctl);
  EXPECT_EQ(ctl.fallbacks(), 3u);
  EXPECT_EQ(calls.load(), 9);
}
