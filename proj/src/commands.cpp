#include "cpi2/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

namespace cpi2 {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows, bool include_timing) {
  std::string csv =
      "episode,eval_return,dynamics_loss,critic_loss,actor_loss,mean_plan_time_s,wall_time_s\n";
  for (const ResultRow& r : rows) {
    csv += std::to_string(r.episode);
    csv += ',';
    csv += cell(r.eval_return);
    csv += ',';
    csv += cell(r.dynamics_loss);
    csv += ',';
    csv += cell(r.critic_loss);
    csv += ',';
    csv += cell(r.actor_loss);
    csv += ',';
    csv += include_timing ? cell(r.mean_plan_time_s) : std::string();
    csv += ',';
    csv += include_timing ? cell(r.wall_time_s) : std::string();
    csv += '\n';
  }
  return csv;
}

ExperimentResult cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ExperimentResult result = run_experiment(cfg);

  write_file(out_dir / "results.csv", rows_to_csv(result.rows, cfg.output.timing));

  std::optional<double> final_eval;
  std::optional<double> best_eval;
  for (const ResultRow& r : result.rows) {
    if (r.eval_return) {
      final_eval = r.eval_return;
      best_eval = best_eval ? std::max(*best_eval, *r.eval_return) : *r.eval_return;
    }
  }
  json summary = {
      {"episodes", cfg.training.episodes},
      {"final_eval_return", final_eval ? json(*final_eval) : json()},
      {"best_eval_return", best_eval ? json(*best_eval) : json()},
      {"config", json::parse(config_to_json(cfg))},
  };
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");

  result.agent.actor.mean_net.save(out_dir / "actor.bin");
  if (cfg.agent == AgentKind::critic_pi2) {
    result.agent.critic.net.save(out_dir / "critic.bin");
  }
  if (cfg.agent == AgentKind::critic_pi2 || cfg.agent == AgentKind::vanilla_pi2 ||
      cfg.agent == AgentKind::mpc) {
    result.agent.dynamics.net().save(out_dir / "dynamics.bin");
  }
  if (cfg.agent == AgentKind::ddpg) {
    result.agent.q_net.net.save(out_dir / "q.bin");
  }
  return result;
}

namespace {

struct TimedStats {
  double mean = 0.0;
  double stddev = 0.0;
};

template <typename Fn>
TimedStats time_calls(int warmup, int calls, Fn&& fn) {
  for (int i = 0; i < warmup; ++i) fn(i);
  Vec samples;
  samples.reserve(calls);
  for (int i = 0; i < calls; ++i) {
    const double t0 = now_seconds();
    fn(warmup + i);
    samples.push_back(now_seconds() - t0);
  }
  TimedStats stats;
  for (double s : samples) stats.mean += s;
  stats.mean /= samples.size();
  for (double s : samples) stats.stddev += (s - stats.mean) * (s - stats.mean);
  stats.stddev = std::sqrt(stats.stddev / samples.size());
  return stats;
}

}  // namespace

BenchmarkReport run_latency_benchmark(const ExperimentConfig& cfg) {
  BenchmarkReport report;
  report.calls = cfg.benchmark.calls;

  // identical freshly initialized networks for every planner
  ExperimentConfig base = cfg;
  base.agent = AgentKind::critic_pi2;
  const Agent proto = make_agent(base);
  Rng obs_rng(mix_seed(cfg.seed, 77, 0));
  const Vec obs = env_reset(cfg.env, obs_rng).second;

  PlannerConfig cpi2_cfg = proto.planner;
  cpi2_cfg.H = 1;
  PlannerConfig long_cfg = proto.planner;
  long_cfg.H = 50;
  long_cfg.return_mode = ReturnMode::monte_carlo;
  long_cfg.greedy = false;
  long_cfg.inner_actor_update = false;

  {
    Agent agent = proto;
    const Predictor predict = make_predictor(agent.dynamics);
    Rng rng(mix_seed(cfg.seed, 78, 0));
    const TimedStats t = time_calls(cfg.benchmark.warmup, cfg.benchmark.calls, [&](int) {
      critic_pi2_plan(obs, agent.actor, &agent.critic, predict, cfg.env, cpi2_cfg, rng);
    });
    report.rows.push_back({"critic_pi2", t.mean, t.stddev, 0.0139});
  }
  {
    Agent agent = proto;
    const Predictor predict = make_predictor(agent.dynamics);
    Rng rng(mix_seed(cfg.seed, 78, 1));
    const TimedStats t = time_calls(cfg.benchmark.warmup, cfg.benchmark.calls, [&](int) {
      baseline_plan(obs, agent.actor, predict, cfg.env, long_cfg, BaselineMode::vanilla_pi2, rng);
    });
    report.rows.push_back({"vanilla_pi2", t.mean, t.stddev, 1.09});
  }
  {
    Agent agent = proto;
    const Predictor predict = make_predictor(agent.dynamics);
    Rng rng(mix_seed(cfg.seed, 78, 2));
    const TimedStats t = time_calls(cfg.benchmark.warmup, cfg.benchmark.calls, [&](int) {
      baseline_plan(obs, agent.actor, predict, cfg.env, long_cfg,
                    BaselineMode::mpc_random_shooting, rng);
    });
    report.rows.push_back({"mpc", t.mean, t.stddev, 1.22});
  }
  {
    Agent agent = proto;
    volatile double sink = 0.0;
    const TimedStats t = time_calls(cfg.benchmark.warmup, cfg.benchmark.calls, [&](int) {
      sink = agent.actor.mean(obs)[0];
    });
    (void)sink;
    report.rows.push_back({"ddpg", t.mean, t.stddev, 0.001});
  }
  return report;
}

BenchmarkReport cmd_benchmark(const ExperimentConfig& cfg,
                              const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const BenchmarkReport report = run_latency_benchmark(cfg);

  std::cout << "mean planning cost over " << report.calls << " calls\n";
  std::cout << "algorithm      mean_s        std_s         reference_s\n";
  json rows = json::array();
  for (const BenchmarkRow& r : report.rows) {
    std::cout << r.algorithm;
    for (std::size_t i = r.algorithm.size(); i < 15; ++i) std::cout << ' ';
    std::string mean = format_double(r.mean_s), std = format_double(r.std_s);
    std::cout << mean;
    for (std::size_t i = mean.size(); i < 14; ++i) std::cout << ' ';
    std::cout << std;
    for (std::size_t i = std.size(); i < 14; ++i) std::cout << ' ';
    std::cout << format_double(r.paper_reference_s) << "\n";
    rows.push_back({{"algorithm", r.algorithm},
                    {"mean_s", r.mean_s},
                    {"std_s", r.std_s},
                    {"reference_s", r.paper_reference_s}});
  }
  json doc = {{"calls", report.calls}, {"rows", rows}};
  write_file(out_dir / "benchmark.json", doc.dump(2) + "\n");
  return report;
}

std::vector<AblationOutcome> cmd_ablation(const ExperimentConfig& cfg,
                                          const std::filesystem::path& out_dir) {
  if (cfg.agent != AgentKind::critic_pi2) {
    throw ConfigError("agent: ablation requires agent=critic_pi2");
  }
  std::filesystem::create_directories(out_dir);

  struct Variant {
    const char* name;
    void (*apply)(ExperimentConfig&);
  };
  const Variant variants[] = {
      {"full", [](ExperimentConfig&) {}},
      {"no_greedy", [](ExperimentConfig& c) { c.ablation.no_greedy = true; }},
      {"no_critic", [](ExperimentConfig& c) { c.ablation.no_critic = true; }},
      {"no_actor_training", [](ExperimentConfig& c) { c.ablation.no_actor_training = true; }},
  };

  std::vector<AblationOutcome> outcomes;
  for (const Variant& variant : variants) {
    AblationOutcome outcome;
    outcome.variant = variant.name;
    const std::filesystem::path variant_dir = out_dir / variant.name;
    for (std::uint64_t seed : cfg.ablation.seeds) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.ablation.no_critic = false;
      run_cfg.ablation.no_greedy = false;
      run_cfg.ablation.no_actor_training = false;
      variant.apply(run_cfg);
      run_cfg.seed = seed;
      const ExperimentResult result =
          cmd_train(run_cfg, variant_dir / ("seed_" + std::to_string(seed)));
      double final_return = 0.0;
      for (const ResultRow& r : result.rows) {
        if (r.eval_return) final_return = *r.eval_return;
      }
      outcome.final_returns.push_back(final_return);
      outcome.first_episode_returns.push_back(
          result.episodes.empty() ? 0.0 : result.episodes.front().total_return);
    }
    for (double r : outcome.final_returns) outcome.mean_final_return += r;
    outcome.mean_final_return /= outcome.final_returns.size();
    outcomes.push_back(std::move(outcome));
  }

  std::vector<std::size_t> order(outcomes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return outcomes[a].mean_final_return > outcomes[b].mean_final_return;
  });

  json ranking = json::array();
  for (std::size_t i : order) {
    ranking.push_back({{"variant", outcomes[i].variant},
                       {"mean_final_return", outcomes[i].mean_final_return},
                       {"final_returns", outcomes[i].final_returns}});
  }
  json seeds = json::array();
  for (std::uint64_t s : cfg.ablation.seeds) seeds.push_back(s);
  json doc = {{"seeds", seeds}, {"ranking", ranking}};
  write_file(out_dir / "comparison.json", doc.dump(2) + "\n");
  return outcomes;
}

}  // namespace cpi2
