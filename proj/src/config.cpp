#include "cpi2/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cpi2 {

using nlohmann::json;

std::string agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::critic_pi2: return "critic_pi2";
    case AgentKind::vanilla_pi2: return "vanilla_pi2";
    case AgentKind::mpc: return "mpc";
    case AgentKind::ddpg: return "ddpg";
    case AgentKind::random: return "random";
  }
  return "unknown";
}

AgentKind agent_kind_from_name(const std::string& name) {
  if (name == "critic_pi2") return AgentKind::critic_pi2;
  if (name == "vanilla_pi2") return AgentKind::vanilla_pi2;
  if (name == "mpc") return AgentKind::mpc;
  if (name == "ddpg") return AgentKind::ddpg;
  if (name == "random") return AgentKind::random;
  throw ConfigError("agent: unknown agent kind '" + name + "'");
}

PlannerConfig ExperimentConfig::resolved_planner() const {
  PlannerConfig p;
  p.K = planner.K;
  p.M = planner.M;
  p.lambda = planner.lambda;
  p.sigma_plan = planner.sigma_plan * env.action_half_range();
  p.gamma = training.gamma;
  p.actor_lr = networks.actor_lr;
  p.rollout_threads = planner.rollout_threads;
  p.record_samples = planner.record_samples;

  const bool is_critic_pi2 = agent == AgentKind::critic_pi2;
  p.H = planner.H.value_or(is_critic_pi2 ? 1 : 50);
  p.return_mode = planner.return_mode.value_or(is_critic_pi2 ? ReturnMode::critic_bootstrap
                                                             : ReturnMode::monte_carlo);
  p.greedy = planner.greedy.value_or(is_critic_pi2);
  p.inner_actor_update = planner.inner_actor_update.value_or(is_critic_pi2);

  if (agent == AgentKind::vanilla_pi2 || agent == AgentKind::mpc) {
    p.return_mode = ReturnMode::monte_carlo;
    p.greedy = false;
    p.inner_actor_update = false;
  }
  if (ablation.no_critic) {
    // Monte Carlo scoring needs a long horizon to be meaningful; match the
    // vanilla baseline convention.
    p.return_mode = ReturnMode::monte_carlo;
    p.H = 50;
  }
  if (ablation.no_greedy) p.greedy = false;
  if (ablation.no_actor_training) p.inner_actor_update = false;
  return p;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field + ": " + message);
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) fail(field, message);
}

// Known-key schema; unknown keys are reported with their dotted path.
const json& schema() {
  static const json s = {
      {"seed", nullptr},
      {"agent", nullptr},
      {"env",
       {{"name", nullptr}, {"dt", nullptr}, {"gravity", nullptr}, {"reset_noise", nullptr},
        {"steps_per_epoch", nullptr}, {"action_low", nullptr}, {"action_high", nullptr},
        {"cart_mass", nullptr}, {"pole_mass", nullptr}, {"pole_half_length", nullptr},
        {"link_mass1", nullptr}, {"link_mass2", nullptr}, {"link_length1", nullptr},
        {"link_length2", nullptr}}},
      {"planner",
       {{"K", nullptr}, {"M", nullptr}, {"H", nullptr}, {"lambda", nullptr},
        {"sigma_plan", nullptr}, {"return_mode", nullptr}, {"greedy", nullptr},
        {"inner_actor_update", nullptr}, {"rollout_threads", nullptr},
        {"record_samples", nullptr}}},
      {"networks",
       {{"hidden", nullptr}, {"actor_lr", nullptr}, {"critic_lr", nullptr},
        {"dynamics_lr", nullptr}, {"policy_sigma", nullptr}}},
      {"training",
       {{"episodes", nullptr}, {"epochs", nullptr}, {"train_every", nullptr},
        {"eval_every", nullptr}, {"eval_episodes", nullptr}, {"batch_size", nullptr},
        {"replay_capacity", nullptr}, {"gamma", nullptr}, {"n_step", nullptr},
        {"rho_bar", nullptr}, {"c_bar", nullptr}}},
      {"ddpg", {{"exploration_sigma", nullptr}, {"tau", nullptr}, {"epoch_multiplier", nullptr}}},
      {"ablation",
       {{"no_critic", nullptr}, {"no_greedy", nullptr}, {"no_actor_training", nullptr},
        {"seeds", nullptr}}},
      {"benchmark", {{"calls", nullptr}, {"warmup", nullptr}}},
      {"output", {{"timing", nullptr}}},
  };
  return s;
}

void check_known_keys(const json& doc, const json& known, const std::string& prefix) {
  if (!doc.is_object()) {
    fail(prefix.empty() ? "config" : prefix, "expected an object");
  }
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = known.find(key);
    if (it == known.end()) fail(path, "unknown key");
    if (it->is_object()) check_known_keys(value, *it, path);
  }
}

template <typename T>
void get_to(const json& doc, const char* section, const char* key, T& out) {
  if (!doc.contains(section)) return;
  const json& sec = doc.at(section);
  if (!sec.contains(key)) return;
  try {
    sec.at(key).get_to(out);
  } catch (const json::exception& e) {
    fail(std::string(section) + "." + key, std::string("bad value (") + e.what() + ")");
  }
}

ReturnMode return_mode_from_name(const std::string& name) {
  if (name == "critic_bootstrap") return ReturnMode::critic_bootstrap;
  if (name == "monte_carlo") return ReturnMode::monte_carlo;
  throw ConfigError("planner.return_mode: unknown mode '" + name + "'");
}

std::string return_mode_name(ReturnMode mode) {
  return mode == ReturnMode::critic_bootstrap ? "critic_bootstrap" : "monte_carlo";
}

void apply_config(const json& doc, ExperimentConfig& cfg) {
  check_known_keys(doc, schema(), "");

  // env.name first so kind-dependent defaults land before explicit values
  if (doc.contains("env") && doc.at("env").contains("name")) {
    std::string name;
    doc.at("env").at("name").get_to(name);
    try {
      cfg.env = make_env_spec(env_kind_from_name(name));
    } catch (const std::invalid_argument& e) {
      fail("env.name", e.what());
    }
  }
  get_to(doc, "env", "dt", cfg.env.dt);
  get_to(doc, "env", "gravity", cfg.env.gravity);
  get_to(doc, "env", "reset_noise", cfg.env.reset_noise);
  get_to(doc, "env", "steps_per_epoch", cfg.env.steps_per_epoch);
  get_to(doc, "env", "action_low", cfg.env.action_low);
  get_to(doc, "env", "action_high", cfg.env.action_high);
  get_to(doc, "env", "cart_mass", cfg.env.cart_mass);
  get_to(doc, "env", "pole_mass", cfg.env.pole_mass);
  get_to(doc, "env", "pole_half_length", cfg.env.pole_half_length);
  get_to(doc, "env", "link_mass1", cfg.env.link_mass1);
  get_to(doc, "env", "link_mass2", cfg.env.link_mass2);
  get_to(doc, "env", "link_length1", cfg.env.link_length1);
  get_to(doc, "env", "link_length2", cfg.env.link_length2);

  if (doc.contains("seed")) doc.at("seed").get_to(cfg.seed);
  if (doc.contains("agent")) {
    std::string name;
    doc.at("agent").get_to(name);
    cfg.agent = agent_kind_from_name(name);
  }

  get_to(doc, "planner", "K", cfg.planner.K);
  get_to(doc, "planner", "M", cfg.planner.M);
  if (doc.contains("planner") && doc.at("planner").contains("H")) {
    int h = 0;
    doc.at("planner").at("H").get_to(h);
    cfg.planner.H = h;
  }
  get_to(doc, "planner", "lambda", cfg.planner.lambda);
  get_to(doc, "planner", "sigma_plan", cfg.planner.sigma_plan);
  if (doc.contains("planner") && doc.at("planner").contains("return_mode")) {
    std::string name;
    doc.at("planner").at("return_mode").get_to(name);
    cfg.planner.return_mode = return_mode_from_name(name);
  }
  if (doc.contains("planner") && doc.at("planner").contains("greedy")) {
    bool b = false;
    doc.at("planner").at("greedy").get_to(b);
    cfg.planner.greedy = b;
  }
  if (doc.contains("planner") && doc.at("planner").contains("inner_actor_update")) {
    bool b = false;
    doc.at("planner").at("inner_actor_update").get_to(b);
    cfg.planner.inner_actor_update = b;
  }
  get_to(doc, "planner", "rollout_threads", cfg.planner.rollout_threads);
  get_to(doc, "planner", "record_samples", cfg.planner.record_samples);

  get_to(doc, "networks", "hidden", cfg.networks.hidden);
  get_to(doc, "networks", "actor_lr", cfg.networks.actor_lr);
  get_to(doc, "networks", "critic_lr", cfg.networks.critic_lr);
  get_to(doc, "networks", "dynamics_lr", cfg.networks.dynamics_lr);
  get_to(doc, "networks", "policy_sigma", cfg.networks.policy_sigma);

  get_to(doc, "training", "episodes", cfg.training.episodes);
  get_to(doc, "training", "epochs", cfg.training.epochs);
  get_to(doc, "training", "train_every", cfg.training.train_every);
  get_to(doc, "training", "eval_every", cfg.training.eval_every);
  get_to(doc, "training", "eval_episodes", cfg.training.eval_episodes);
  get_to(doc, "training", "batch_size", cfg.training.batch_size);
  get_to(doc, "training", "replay_capacity", cfg.training.replay_capacity);
  get_to(doc, "training", "gamma", cfg.training.gamma);
  get_to(doc, "training", "n_step", cfg.training.n_step);
  get_to(doc, "training", "rho_bar", cfg.training.rho_bar);
  get_to(doc, "training", "c_bar", cfg.training.c_bar);

  get_to(doc, "ddpg", "exploration_sigma", cfg.ddpg.exploration_sigma);
  get_to(doc, "ddpg", "tau", cfg.ddpg.tau);
  get_to(doc, "ddpg", "epoch_multiplier", cfg.ddpg.epoch_multiplier);

  get_to(doc, "ablation", "no_critic", cfg.ablation.no_critic);
  get_to(doc, "ablation", "no_greedy", cfg.ablation.no_greedy);
  get_to(doc, "ablation", "no_actor_training", cfg.ablation.no_actor_training);
  get_to(doc, "ablation", "seeds", cfg.ablation.seeds);

  get_to(doc, "benchmark", "calls", cfg.benchmark.calls);
  get_to(doc, "benchmark", "warmup", cfg.benchmark.warmup);

  get_to(doc, "output", "timing", cfg.output.timing);
}

json override_to_json(const std::string& dotted_key, const std::string& value) {
  json leaf;
  try {
    leaf = json::parse(value);
  } catch (const json::exception&) {
    leaf = value;  // unquoted strings like env.name=InvertedPendulum
  }
  json doc = leaf;
  std::vector<std::string> parts;
  std::stringstream ss(dotted_key);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("override: empty key");
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    doc = json{{*it, doc}};
  }
  return doc;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(env.dt > 0.0, "env.dt", "must be > 0");
  require(env.action_low < env.action_high, "env.action_low", "must be < env.action_high");
  require(env.steps_per_epoch >= 1, "env.steps_per_epoch", "must be >= 1");
  require(env.reset_noise >= 0.0, "env.reset_noise", "must be >= 0");
  require(env.gravity > 0.0, "env.gravity", "must be > 0");

  require(planner.K >= 2, "planner.K", "must be >= 2");
  require(planner.M >= 1, "planner.M", "must be >= 1");
  require(!planner.H || *planner.H >= 1, "planner.H", "must be >= 1");
  require(planner.lambda > 0.0, "planner.lambda", "must be > 0");
  require(planner.sigma_plan >= 0.0, "planner.sigma_plan", "must be >= 0");
  require(planner.rollout_threads >= 1, "planner.rollout_threads", "must be >= 1");

  require(!networks.hidden.empty(), "networks.hidden", "must not be empty");
  for (int h : networks.hidden) require(h >= 1, "networks.hidden", "sizes must be >= 1");
  require(networks.actor_lr > 0.0, "networks.actor_lr", "must be > 0");
  require(networks.critic_lr > 0.0, "networks.critic_lr", "must be > 0");
  require(networks.dynamics_lr > 0.0, "networks.dynamics_lr", "must be > 0");
  require(networks.policy_sigma > 0.0, "networks.policy_sigma", "must be > 0");

  require(training.episodes >= 0, "training.episodes", "must be >= 0");
  require(training.epochs >= 0, "training.epochs", "must be >= 0");
  require(training.train_every >= 1, "training.train_every", "must be >= 1");
  require(training.eval_every >= 1, "training.eval_every", "must be >= 1");
  require(training.eval_episodes >= 1, "training.eval_episodes", "must be >= 1");
  require(training.batch_size >= 1, "training.batch_size", "must be >= 1");
  require(training.replay_capacity >= 1, "training.replay_capacity", "must be >= 1");
  require(training.gamma > 0.0 && training.gamma < 1.0, "training.gamma", "must be in (0, 1)");
  require(training.n_step >= 1, "training.n_step", "must be >= 1");
  require(training.rho_bar >= training.c_bar, "training.rho_bar", "must be >= training.c_bar");
  require(training.c_bar > 0.0, "training.c_bar", "must be > 0");

  require(ddpg.exploration_sigma >= 0.0, "ddpg.exploration_sigma", "must be >= 0");
  require(ddpg.tau >= 0.0 && ddpg.tau <= 1.0, "ddpg.tau", "must be in [0, 1]");
  require(ddpg.epoch_multiplier >= 1, "ddpg.epoch_multiplier", "must be >= 1");

  require(benchmark.calls >= 1, "benchmark.calls", "must be >= 1");
  require(benchmark.warmup >= 0, "benchmark.warmup", "must be >= 0");

  const bool any_ablation =
      ablation.no_critic || ablation.no_greedy || ablation.no_actor_training;
  require(!any_ablation || agent == AgentKind::critic_pi2, "ablation",
          "ablation switches are only valid for the critic_pi2 agent");
  require(!ablation.seeds.empty(), "ablation.seeds", "must not be empty");
}

ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path,
                              const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file: " + path->string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    const bool blank = std::all_of(text.begin(), text.end(),
                                   [](unsigned char c) { return std::isspace(c); });
    if (!blank) {
      json doc;
      try {
        doc = json::parse(text);
      } catch (const json::exception& e) {
        throw ConfigError("config file " + path->string() + ": " + e.what());
      }
      apply_config(doc, cfg);
    }
  }
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + kv + "' is not of the form key=value");
    }
    apply_config(override_to_json(kv.substr(0, eq), kv.substr(eq + 1)), cfg);
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const PlannerConfig p = cfg.resolved_planner();
  json doc = {
      {"seed", cfg.seed},
      {"agent", agent_kind_name(cfg.agent)},
      {"env",
       {{"name", env_kind_name(cfg.env.kind)}, {"dt", cfg.env.dt},
        {"gravity", cfg.env.gravity}, {"reset_noise", cfg.env.reset_noise},
        {"steps_per_epoch", cfg.env.steps_per_epoch}, {"action_low", cfg.env.action_low},
        {"action_high", cfg.env.action_high}, {"cart_mass", cfg.env.cart_mass},
        {"pole_mass", cfg.env.pole_mass}, {"pole_half_length", cfg.env.pole_half_length},
        {"link_mass1", cfg.env.link_mass1}, {"link_mass2", cfg.env.link_mass2},
        {"link_length1", cfg.env.link_length1}, {"link_length2", cfg.env.link_length2}}},
      {"planner",
       {{"K", p.K}, {"M", p.M}, {"H", p.H}, {"lambda", p.lambda},
        {"sigma_plan", cfg.planner.sigma_plan}, {"return_mode", return_mode_name(p.return_mode)},
        {"greedy", p.greedy}, {"inner_actor_update", p.inner_actor_update},
        {"rollout_threads", p.rollout_threads}}},
      {"networks",
       {{"hidden", cfg.networks.hidden}, {"actor_lr", cfg.networks.actor_lr},
        {"critic_lr", cfg.networks.critic_lr}, {"dynamics_lr", cfg.networks.dynamics_lr},
        {"policy_sigma", cfg.networks.policy_sigma}}},
      {"training",
       {{"episodes", cfg.training.episodes}, {"epochs", cfg.training.epochs},
        {"train_every", cfg.training.train_every}, {"eval_every", cfg.training.eval_every},
        {"eval_episodes", cfg.training.eval_episodes}, {"batch_size", cfg.training.batch_size},
        {"replay_capacity", cfg.training.replay_capacity}, {"gamma", cfg.training.gamma},
        {"n_step", cfg.training.n_step}, {"rho_bar", cfg.training.rho_bar},
        {"c_bar", cfg.training.c_bar}}},
      {"ddpg",
       {{"exploration_sigma", cfg.ddpg.exploration_sigma}, {"tau", cfg.ddpg.tau},
        {"epoch_multiplier", cfg.ddpg.epoch_multiplier}}},
      {"ablation",
       {{"no_critic", cfg.ablation.no_critic}, {"no_greedy", cfg.ablation.no_greedy},
        {"no_actor_training", cfg.ablation.no_actor_training}}},
      {"output", {{"timing", cfg.output.timing}}},
  };
  return doc.dump(2);
}

}  // namespace cpi2
