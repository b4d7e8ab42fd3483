// Command-line front end: run, sweep, train-ppo, eval-ppo, replay.
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frsicl/harness.hpp"

namespace {

using namespace frsicl;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t replicates = 1;
  std::string policy = "maxaoi";
  std::string llm_endpoint;
  std::string llm_model = "gpt-4o-mini";
  std::string mock_llm;
  std::string out_dir = "out";
  std::string ppo_params;
  std::size_t episodes = 0;
  bool greedy = false;
  std::vector<std::size_t> counts{5, 10, 15};
  std::vector<std::string> policies{"maxaoi", "nearest", "roundrobin"};
};

ExperimentSpec base_spec(const Options& o) {
  ExperimentSpec spec = o.config.empty() ? ExperimentSpec{} : load_config(o.config);
  if (o.seed_set || o.replicates != 1) spec.seeds = seed_range(o.seed_set ? o.seed : spec.world.seed, o.replicates);
  spec.out_dir = o.out_dir;
  spec.icl.endpoint = o.llm_endpoint;
  spec.icl.model = o.llm_model;
  if (!o.mock_llm.empty()) {
    try {
      spec.icl.backend = icl::parse_backend_kind(o.mock_llm);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    if (spec.icl.backend == icl::BackendKind::http) throw ValidationError("--mock-llm expects max-aoi, nearest or invalid");
  }
  if (const char* key = std::getenv(icl::kApiKeyEnv)) spec.icl.api_key = key;
  spec.ppo_params_path = o.ppo_params;
  spec.ppo_greedy = o.greedy;
  return spec;
}

void warn_missing_key(const ExperimentSpec& spec) {
  if (spec.policy == PolicyKind::icl && spec.icl.backend == icl::BackendKind::http && spec.icl.api_key.empty()) {
    std::cerr << "warning: " << icl::kApiKeyEnv << " is not set; requests are sent without an Authorization header\n";
  }
}

void print_summaries(const ExperimentResult& r) {
  for (const RunRecord& run : r.runs) {
    std::cout << run.summary.run_id << ": time-avg AoI " << format_number(run.summary.time_avg_aoi_s)
              << " s, success rate " << format_number(run.summary.success_rate);
    if (run.fallbacks > 0) std::cout << ", fallbacks " << run.fallbacks;
    std::cout << '\n';
  }
}

int cmd_run(const Options& o, bool force_ppo) {
  ExperimentSpec spec = base_spec(o);
  spec.policy = force_ppo ? PolicyKind::ppo : parse_policy_kind(o.policy);
  warn_missing_key(spec);
  const ExperimentResult r = run_experiment(spec);
  print_summaries(r);
  std::cout << "wrote " << spec.out_dir << "/{config.json,steps.csv,sensors.csv,summary.csv}\n";
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  ExperimentSpec spec = base_spec(o);
  if (o.replicates == 1 && !o.seed_set) spec.seeds = seed_range(spec.world.seed, kDefaultReplicates);
  std::vector<PolicyKind> policies;
  for (const std::string& p : o.policies) policies.push_back(parse_policy_kind(p));
  for (PolicyKind p : policies) {
    spec.policy = p;
    warn_missing_key(spec);
  }
  const auto rows = sweep_sensors(spec, o.counts, policies);
  for (const SweepRow& r : rows) {
    std::cout << "N=" << r.n_sensors << ' ' << to_string(r.policy) << ": mean " << format_number(r.mean_aoi_s)
              << " s, std " << format_number(r.std_aoi_s) << " (" << r.n_runs << " runs)\n";
  }
  std::cout << "wrote " << spec.out_dir << "/sweep.csv\n";
  return kExitOk;
}

int cmd_train(const Options& o) {
  ExperimentSpec spec = base_spec(o);
  ppo::PpoConfig pc;
  if (o.episodes > 0) pc.episodes = o.episodes;
  try {
    ppo::validate(pc);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  const std::uint64_t seed = spec.seeds.front();
  prepare_out_dir(spec.out_dir);
  const auto result = ppo::train(spec.world, ppo::fixed_layout_factory(spec.world, seed), pc, seed);
  const std::filesystem::path dir(spec.out_dir);
  const std::string params_path = o.ppo_params.empty() ? (dir / "ppo_params.bin").string() : o.ppo_params;
  ppo::save_params(result.params, params_path);
  ppo::write_curve_csv(result.curve, (dir / "curve.csv").string());
  write_config_json(spec.world, (dir / "config.json").string());
  const std::size_t tail = std::min<std::size_t>(20, result.curve.size());
  double first = 0, last = 0;
  for (std::size_t i = 0; i < tail; ++i) {
    first += result.curve[i].mean_aoi;
    last += result.curve[result.curve.size() - 1 - i].mean_aoi;
  }
  std::cout << "trained " << result.curve.size() << " episodes; mean AoI first " << tail << ": "
            << format_number(first / static_cast<double>(tail)) << " s, last " << tail << ": "
            << format_number(last / static_cast<double>(tail)) << " s\n";
  std::cout << "wrote " << params_path << " and " << (dir / "curve.csv").string() << '\n';
  return kExitOk;
}

int cmd_replay(const Options& o) {
  const ReplayReport r = replay(o.out_dir);
  std::cout << "replay ok: " << r.runs << " runs, " << r.steps << " steps verified\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV sensor-scheduling simulator with LLM in-context-learning, PPO and heuristic policies"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file (absent keys use defaults)");
    sub->add_option("--seed", o.seed, "first replicate seed")->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--replicates", o.replicates, "number of consecutive seeds")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  };
  auto add_llm = [&](CLI::App* sub) {
    sub->add_option("--llm-endpoint", o.llm_endpoint, "OpenAI-compatible base URL, e.g. https://api.openai.com");
    sub->add_option("--llm-model", o.llm_model, "model name")->capture_default_str();
    sub->add_option("--mock-llm", o.mock_llm, "offline backend: max-aoi, nearest or invalid");
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment (one episode per seed)");
  add_common(run);
  add_llm(run);
  run->add_option("--policy", o.policy, "icl, ppo, nearest, roundrobin or maxaoi")->capture_default_str();
  run->add_option("--ppo-params", o.ppo_params, "trained parameters for --policy ppo");
  run->add_flag("--greedy", o.greedy, "ppo: take the most likely action instead of sampling");

  CLI::App* sweep = app.add_subcommand("sweep", "mean AoI per sensor count and policy");
  add_common(sweep);
  add_llm(sweep);
  sweep->add_option("--counts", o.counts, "sensor counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--policies", o.policies, "policies to compare")->delimiter(',')->capture_default_str();
  sweep->add_option("--ppo-params", o.ppo_params, "trained parameters when ppo is swept");

  CLI::App* train = app.add_subcommand("train-ppo", "train a PPO policy on a fixed layout");
  add_common(train);
  train->add_option("--episodes", o.episodes, "training episodes");
  train->add_option("--ppo-params", o.ppo_params, "output parameter file (default <out-dir>/ppo_params.bin)");

  CLI::App* eval = app.add_subcommand("eval-ppo", "run trained PPO parameters");
  add_common(eval);
  eval->add_option("--ppo-params", o.ppo_params, "trained parameter file")->required();
  eval->add_flag("--greedy", o.greedy, "take the most likely action instead of sampling");

  CLI::App* rep = app.add_subcommand("replay", "re-simulate an output directory and verify steps.csv");
  rep->add_option("--out-dir,dir", o.out_dir, "directory written by run")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*run) return cmd_run(o, false);
    if (*sweep) return cmd_sweep(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_run(o, true);
    if (*rep) return cmd_replay(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
