#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "climit/pipeline.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Credit-limit response modelling pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string variants_csv;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "Key = value config file");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--variants", variants_csv, "Comma-separated model variants");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic train/test data");
  auto* train = app.add_subcommand("train", "Fit the requested model variants");
  auto* evaluate = app.add_subcommand("evaluate", "Grouped RMAE per method and split");
  auto* curves = app.add_subcommand("curves", "Subgroup response curves and PDPs");
  for (auto* sub : {simulate, train, evaluate, curves}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  seed_set = seed_opt->count() > 0;

  climit::RunConfig config;
  if (!config_path.empty()) config = climit::load_config(config_path);
  if (seed_set) config.seed = seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (const char* env_out = std::getenv("CLIMIT_OUT"); env_out != nullptr && out_dir.empty()) {
    config.out_dir = env_out;
  }
  if (!variants_csv.empty()) {
    climit::apply_config_line(config, "variants", variants_csv);
  }
  climit::validate_config(config);

  if (simulate->parsed()) climit::cmd_simulate(config);
  if (train->parsed()) climit::cmd_train(config);
  if (evaluate->parsed()) climit::cmd_evaluate(config);
  if (curves->parsed()) climit::cmd_curves(config);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const climit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
