// Acceptance suite: one criterion per invocation, one pass/fail line each.
// Usage: acceptance <criterion 1..9>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cpi2/commands.hpp"
#include "cpi2/config.hpp"
#include "cpi2/trainer.hpp"
#include "oracles.hpp"

using namespace cpi2;
namespace fs = std::filesystem;

namespace {

struct RunStats {
  double max_eval = 0.0;
  double eval_at_episode = 0.0;  // last eval round at or before the probe episode
  double last_eval = 0.0;
  double first_episode_return = 0.0;
};

RunStats run_stats(const ExperimentConfig& cfg, int probe_episode) {
  const ExperimentResult result = run_experiment(cfg);
  RunStats stats;
  if (!result.episodes.empty()) stats.first_episode_return = result.episodes.front().total_return;
  for (const ResultRow& row : result.rows) {
    if (!row.eval_return) continue;
    stats.max_eval = std::max(stats.max_eval, *row.eval_return);
    stats.last_eval = *row.eval_return;
    if (row.episode <= probe_episode) stats.eval_at_episode = *row.eval_return;
  }
  return stats;
}

/// Runs jobs on a fixed-size pool; results land in caller-owned slots.
void run_pool(std::vector<std::function<void()>>& jobs, int workers) {
  std::mutex next_mutex;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t j;
        {
          std::lock_guard<std::mutex> lock(next_mutex);
          if (next >= jobs.size()) return;
          j = next++;
        }
        jobs[j]();
      }
    });
  }
  for (auto& t : pool) t.join();
}

double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / v.size();
}

int report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  return pass ? 0 : 1;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. InvertedPendulum solved: mean evaluation return >= 450/500 within 100
//    episodes on at least 3 of 5 seeds.
int criterion_1() {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> best(seeds.size(), 0.0);
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    jobs.push_back([&, i] {
      ExperimentConfig cfg;
      cfg.seed = seeds[i];
      cfg.training.episodes = 100;
      best[i] = run_stats(cfg, 100).max_eval;
    });
  }
  run_pool(jobs, 5);
  int solved = 0;
  std::string detail = "max eval per seed:";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    solved += best[i] >= 450.0;
    detail += " " + format_double(best[i]);
  }
  detail += " (need >=450 on >=3 of 5)";
  return report(1, solved >= 3, detail);
}

// ---------------------------------------------------------------------------
// 2. Sample-efficiency ordering at episode 50 on InvertedPendulum:
//    critic_pi2 >= vanilla_pi2 and critic_pi2 >= ddpg, mean over 5 seeds.
int criterion_2() {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const std::vector<AgentKind> agents{AgentKind::critic_pi2, AgentKind::vanilla_pi2,
                                      AgentKind::ddpg};
  std::vector<std::vector<double>> at50(agents.size(), std::vector<double>(seeds.size(), 0.0));
  std::vector<std::function<void()>> jobs;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      jobs.push_back([&, a, i] {
        ExperimentConfig cfg;
        cfg.agent = agents[a];
        cfg.seed = seeds[i];
        cfg.training.episodes = 50;
        cfg.training.eval_every = 50;  // one eval round, exactly at the probe episode
        at50[a][i] = run_stats(cfg, 50).eval_at_episode;
      });
    }
  }
  run_pool(jobs, 8);
  const double cpi2 = mean(at50[0]);
  const double pi2 = mean(at50[1]);
  const double ddpg = mean(at50[2]);
  const bool pass = cpi2 >= pi2 && cpi2 >= ddpg;
  return report(2, pass,
                "mean return at episode 50: critic_pi2 " + format_double(cpi2) +
                    ", vanilla_pi2 " + format_double(pi2) + ", ddpg " + format_double(ddpg));
}

// ---------------------------------------------------------------------------
// 3. Ablation ordering on InvertedDoublePendulum over 3 seeds: full >= each of
//    {no_greedy, no_critic} on final mean return; no_actor_training still
//    improves over its own episode-1 return.
int criterion_3() {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  struct Variant {
    const char* name;
    bool no_greedy, no_critic, no_actor;
  };
  const std::vector<Variant> variants{{"full", false, false, false},
                                      {"no_greedy", true, false, false},
                                      {"no_critic", false, true, false},
                                      {"no_actor_training", false, false, true}};
  std::vector<std::vector<RunStats>> stats(variants.size(),
                                           std::vector<RunStats>(seeds.size()));
  std::vector<std::function<void()>> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      jobs.push_back([&, v, i] {
        ExperimentConfig cfg;
        cfg.env = make_env_spec(EnvKind::InvertedDoublePendulum);
        cfg.seed = seeds[i];
        cfg.training.episodes = 30;
        cfg.training.eval_every = 5;
        cfg.training.eval_episodes = 2;
        cfg.ablation.no_greedy = variants[v].no_greedy;
        cfg.ablation.no_critic = variants[v].no_critic;
        cfg.ablation.no_actor_training = variants[v].no_actor;
        stats[v][i] = run_stats(cfg, cfg.training.episodes);
      });
    }
  }
  run_pool(jobs, 8);

  std::vector<double> final_means(variants.size(), 0.0);
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<double> finals;
    for (const RunStats& s : stats[v]) finals.push_back(s.last_eval);
    final_means[v] = mean(finals);
  }
  std::vector<double> no_actor_first;
  for (const RunStats& s : stats[3]) no_actor_first.push_back(s.first_episode_return);
  const double no_actor_start = mean(no_actor_first);

  const bool ordering = final_means[0] >= final_means[1] && final_means[0] >= final_means[2];
  const bool improves = final_means[3] > no_actor_start;
  std::string detail = "final mean returns: full " + format_double(final_means[0]) +
                       ", no_greedy " + format_double(final_means[1]) + ", no_critic " +
                       format_double(final_means[2]) + ", no_actor_training " +
                       format_double(final_means[3]) + " (episode-1 baseline " +
                       format_double(no_actor_start) + ")";
  return report(3, ordering && improves, detail);
}

// ---------------------------------------------------------------------------
// 4. Planning latency: critic_pi2 (H=1) at least 10x faster than vanilla_pi2
//    (H=50) and random shooting (H=50) at equal K; ddpg fastest.
int criterion_4() {
  ExperimentConfig cfg;
  cfg.seed = 0;
  const BenchmarkReport bench = run_latency_benchmark(cfg);
  const double cpi2 = bench.rows[0].mean_s;
  const double pi2 = bench.rows[1].mean_s;
  const double mpc = bench.rows[2].mean_s;
  const double ddpg = bench.rows[3].mean_s;
  const bool pass = pi2 >= 10.0 * cpi2 && mpc >= 10.0 * cpi2 && ddpg < cpi2;
  std::string detail = "measured s/plan (reference): critic_pi2 " + format_double(cpi2) +
                       " (0.0139), vanilla_pi2 " + format_double(pi2) + " (1.09), mpc " +
                       format_double(mpc) + " (1.22), ddpg " + format_double(ddpg) +
                       " (0.001); ratios " + format_double(pi2 / cpi2) + "x and " +
                       format_double(mpc / cpi2) + "x";
  return report(4, pass, detail);
}

// ---------------------------------------------------------------------------
// 5. Path-integral weight suite.
int criterion_5() {
  Rng rng(2025);
  double worst_sum_err = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(32);
    Vec s(k);
    for (double& x : s) x = rng.uniform(0.0, 1.0);
    const double lambda = std::exp(rng.uniform(std::log(1e-4), std::log(100.0)));
    const Vec w = pi2_weights(s, lambda);
    double sum = 0.0;
    for (double x : w) {
      if (x < 0.0) return report(5, false, "negative weight");
      sum += x;
    }
    worst_sum_err = std::max(worst_sum_err, std::abs(sum - 1.0));
  }
  if (worst_sum_err > 1e-9) {
    return report(5, false, "weight sum error " + format_double(worst_sum_err));
  }

  // sharpening at tiny temperature with well-separated costs
  double min_concentration = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec costs(16);
    for (std::size_t i = 0; i < costs.size(); ++i) {
      costs[i] = rng.uniform(0.0, 10.0) + static_cast<double>(i) * 1e-2;
    }
    const Vec s = normalize_costs(costs);
    const Vec w = pi2_weights(s, 1e-6);
    const std::size_t min_i =
        std::min_element(costs.begin(), costs.end()) - costs.begin();
    min_concentration = std::min(min_concentration, w[min_i]);
  }
  if (min_concentration < 0.999) {
    return report(5, false, "sharpening concentration " + format_double(min_concentration));
  }

  // degenerate cost range: uniform weights
  const Vec uniform = pi2_weights(normalize_costs(Vec{4.2, 4.2, 4.2, 4.2, 4.2}), 0.3);
  for (double w : uniform) {
    if (std::abs(w - 0.2) > 1e-12) return report(5, false, "degenerate range not uniform");
  }

  // affine cost invariance
  double worst_affine = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vec costs(12);
    for (double& c : costs) c = rng.uniform(-50.0, 50.0);
    const double a = std::exp(rng.uniform(std::log(1e-2), std::log(1e3)));
    const double b = rng.uniform(-100.0, 100.0);
    Vec scaled = costs;
    for (double& c : scaled) c = a * c + b;
    const Vec w1 = pi2_weights(normalize_costs(costs), 0.3);
    const Vec w2 = pi2_weights(normalize_costs(scaled), 0.3);
    for (std::size_t i = 0; i < w1.size(); ++i) {
      worst_affine = std::max(worst_affine, std::abs(w1[i] - w2[i]));
    }
  }
  if (worst_affine > 1e-9) {
    return report(5, false, "affine invariance error " + format_double(worst_affine));
  }
  return report(5, true,
                "sum err " + format_double(worst_sum_err) + ", min concentration " +
                    format_double(min_concentration) + ", affine err " +
                    format_double(worst_affine));
}

// ---------------------------------------------------------------------------
// 6. V-trace equals n-step TD targets on-policy with unit clips, 1e-10.
int criterion_6() {
  Rng rng(7);
  GaussianPolicy actor = make_gaussian_policy(3, 1, {16}, 0.5, rng);
  const Critic critic{Mlp::init({3, 16, 1}, rng), 1.0};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(5));
    const int len = 1 + static_cast<int>(rng.uniform_index(12));
    const bool terminal = rng.uniform() < 0.5;
    std::vector<Transition> seq;
    Vec obs{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (int i = 0; i < len; ++i) {
      Transition t;
      t.obs = obs;
      t.action = {rng.uniform(-1, 1)};
      t.reward = rng.uniform(-2, 2);
      obs = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      t.next_obs = obs;
      t.terminated = terminal && i + 1 == len;
      t.behavior_log_prob = actor.log_prob(t.obs, t.action);
      seq.push_back(std::move(t));
    }
    const VtraceConfig cfg{1.0, 1.0, 0.97, n};
    const Vec targets = vtrace_targets(seq, critic, actor, cfg);
    for (int s = 0; s < len; ++s) {
      const int end = std::min(len, s + n);
      std::vector<double> rewards;
      for (int t = s; t < end; ++t) rewards.push_back(seq[t].reward);
      const bool tail_terminal = terminal && end == len;
      const double bootstrap = tail_terminal ? 0.0 : critic.value(seq[end - 1].next_obs);
      worst = std::max(worst,
                       std::abs(targets[s] - oracles::direct_n_step(rewards, bootstrap, 0.97)));
    }
  }
  return report(6, worst <= 1e-10, "max |vtrace - nstep| = " + format_double(worst));
}

// ---------------------------------------------------------------------------
// 7. Analytic vs central finite-difference gradients, both loss kinds.
int criterion_7() {
  Rng rng(99);
  const Vec sigma{0.4, 0.8};
  double worst = 0.0;
  for (LossKind kind : {LossKind::mse, LossKind::gaussian_nll}) {
    for (int net_i = 0; net_i < 20; ++net_i) {
      Mlp net = Mlp::init({3, 10, 2}, rng);
      std::vector<Vec> inputs, targets;
      for (int s = 0; s < 4; ++s) {
        inputs.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        targets.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
      }
      Vec grad(net.param_count(), 0.0);
      Mlp::Trace trace;
      const double inv_b = 1.0 / inputs.size();
      for (std::size_t s = 0; s < inputs.size(); ++s) {
        const Vec y = net.forward(inputs[s], trace);
        Vec dout(y.size());
        for (std::size_t d = 0; d < y.size(); ++d) {
          dout[d] = kind == LossKind::mse
                        ? 2.0 * (y[d] - targets[s][d]) * inv_b / y.size()
                        : (y[d] - targets[s][d]) / (sigma[d] * sigma[d]) * inv_b;
        }
        net.backward(trace, dout, grad);
      }
      for (int probe = 0; probe < 10; ++probe) {
        const std::size_t i = rng.uniform_index(net.param_count());
        const double fd = oracles::central_difference(
            [&] { return oracles::batch_loss(net, inputs, targets, kind, sigma); },
            net.params()[i], 1e-5);
        const double rel =
            std::abs(grad[i] - fd) / std::max(std::abs(grad[i]) + std::abs(fd), 1e-7);
        worst = std::max(worst, rel);
      }
    }
  }
  return report(7, worst < 1e-4, "max relative gradient error = " + format_double(worst));
}

// ---------------------------------------------------------------------------
// 8. Dynamics learning beats the zero-delta baseline by 2x on held-out data.
int criterion_8() {
  const EnvSpec env = make_env_spec(EnvKind::InvertedPendulum);
  Rng env_rng(31);
  std::vector<Transition> data;
  auto [state, obs] = env_reset(env, env_rng);
  bool fresh = true;
  while (data.size() < 5000) {
    const Vec action{env_rng.uniform(env.action_low, env.action_high)};
    auto [next, step] = env_step(env, state, action);
    data.push_back(Transition{obs, action, step.reward, step.observation, step.terminated, 0.0});
    fresh = step.terminated || step.truncated;
    if (fresh) {
      std::tie(state, obs) = env_reset(env, env_rng);
    } else {
      state = std::move(next);
      obs = data.back().next_obs;
    }
  }
  const std::size_t held_out = 1000;
  std::vector<Transition> train_set(data.begin(), data.end() - held_out);
  std::vector<Transition> test_set(data.end() - held_out, data.end());

  Rng net_rng(32);
  DynamicsModel model(env.obs_dim, env.action_dim, {64, 64}, net_rng);
  ReplayBuffer stats_buffer(train_set.size());
  for (auto& t : train_set) stats_buffer.push(t, false);
  auto [in_norm, t_norm] = fit_dynamics_normalizers(stats_buffer);
  model.set_normalization(in_norm, t_norm);
  Rng batch_rng(33);
  for (int epoch = 0; epoch < 200; ++epoch) {
    std::vector<Transition> batch;
    batch.reserve(256);
    for (int i = 0; i < 256; ++i) {
      batch.push_back(train_set[batch_rng.uniform_index(train_set.size())]);
    }
    model.train_batch(batch, 1e-3);
  }

  double model_mse = 0.0, baseline_mse = 0.0;
  std::size_t count = 0;
  for (const Transition& t : test_set) {
    const Vec pred = model.predict_next(t.obs, t.action);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      model_mse += (pred[i] - t.next_obs[i]) * (pred[i] - t.next_obs[i]);
      baseline_mse += (t.obs[i] - t.next_obs[i]) * (t.obs[i] - t.next_obs[i]);
      ++count;
    }
  }
  model_mse /= count;
  baseline_mse /= count;
  return report(8, model_mse < 0.5 * baseline_mse,
                "held-out mse " + format_double(model_mse) + " vs zero-delta baseline " +
                    format_double(baseline_mse));
}

// ---------------------------------------------------------------------------
// 9. Byte-identical CSVs across reruns, including with parallel rollouts.
int criterion_9() {
  auto smoke = [](int threads) {
    ExperimentConfig cfg = parse_config(
        std::nullopt,
        {"training.episodes=4", "training.epochs=5", "training.batch_size=32", "planner.K=8",
         "planner.M=2", "networks.hidden=[16,16]", "training.eval_every=2",
         "training.eval_episodes=1", "output.timing=false"});
    cfg.seed = 11;
    cfg.planner.rollout_threads = threads;
    return cfg;
  };
  const fs::path base = fs::temp_directory_path() / "cpi2_acceptance_det";
  fs::remove_all(base);
  cmd_train(smoke(1), base / "serial_a");
  cmd_train(smoke(1), base / "serial_b");
  cmd_train(smoke(4), base / "parallel_a");
  cmd_train(smoke(4), base / "parallel_b");
  const std::string serial_a = read_file(base / "serial_a" / "results.csv");
  const std::string serial_b = read_file(base / "serial_b" / "results.csv");
  const std::string parallel_a = read_file(base / "parallel_a" / "results.csv");
  const std::string parallel_b = read_file(base / "parallel_b" / "results.csv");
  const bool rerun_identical = serial_a == serial_b && parallel_a == parallel_b;
  const bool threads_identical = serial_a == parallel_a;
  const bool models_identical = read_file(base / "serial_a" / "actor.bin") ==
                                read_file(base / "parallel_a" / "actor.bin");
  return report(9, rerun_identical && threads_identical && models_identical,
                std::string("rerun byte-identical: ") + (rerun_identical ? "yes" : "no") +
                    ", serial == parallel: " + (threads_identical ? "yes" : "no") +
                    ", model files identical: " + (models_identical ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..9>\n");
    return 2;
  }
  const int criterion = std::atoi(argv[1]);
  switch (criterion) {
    case 1: return criterion_1();
    case 2: return criterion_2();
    case 3: return criterion_3();
    case 4: return criterion_4();
    case 5: return criterion_5();
    case 6: return criterion_6();
    case 7: return criterion_7();
    case 8: return criterion_8();
    case 9: return criterion_9();
    default:
      std::fprintf(stderr, "unknown criterion %d\n", criterion);
      return 2;
  }
}
