#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cpi2/commands.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--set", args.overrides, "dotted key=value override, repeatable");
  cmd->add_option("--seed", args.seed, "experiment seed");
  cmd->add_option("--out", args.out_dir, "output directory");
}

std::filesystem::path resolve_out(const CommonArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("CPI2_OUT")) return env;
  return "runs";
}

cpi2::ExperimentConfig load_config(const CommonArgs& args) {
  std::optional<std::filesystem::path> path;
  if (!args.config_path.empty()) path = args.config_path;
  cpi2::ExperimentConfig cfg = cpi2::parse_config(path, args.overrides);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critic-assisted path-integral control lab"};
  app.require_subcommand(1);

  CommonArgs train_args, bench_args, ablation_args;
  CLI::App* train = app.add_subcommand("train", "run one training experiment");
  add_common(train, train_args);
  CLI::App* bench = app.add_subcommand("benchmark", "measure planning latency per algorithm");
  add_common(bench, bench_args);
  CLI::App* ablation = app.add_subcommand("ablation", "run the four-variant ablation matrix");
  add_common(ablation, ablation_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      cpi2::cmd_train(load_config(train_args), resolve_out(train_args));
    } else if (bench->parsed()) {
      cpi2::cmd_benchmark(load_config(bench_args), resolve_out(bench_args));
    } else if (ablation->parsed()) {
      cpi2::cmd_ablation(load_config(ablation_args), resolve_out(ablation_args));
    }
  } catch (const cpi2::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
