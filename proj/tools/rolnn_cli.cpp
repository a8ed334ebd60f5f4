#include <CLI11.hpp>

#include "rolnn/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"geometric Lagrangian dynamics learning and reduced-order modeling"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, dataset, scheme = "euler";
  std::vector<int> h_test = {8, 25, 50};
  uint64_t seed = 0;
  bool plots = false;

  auto* gen = app.add_subcommand("gen-data", "generate a ground-truth dataset");
  gen->add_option("--config", config, "run configuration file")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a model from a configuration");
  train->add_option("--config", config, "run configuration file")->required();
  auto* seed_opt = train->add_option("--seed", seed, "override the config seed");
  train->add_option("--out", out, "override the output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval->add_option("--dataset", dataset, "dataset file")->required();
  eval->add_option("--h-test", h_test, "re-encoding horizons");
  eval->add_option("--scheme", scheme, "integration scheme (euler | rk4)");
  eval->add_option("--out", out, "output directory")->required();
  eval->add_flag("--plots", plots, "emit SVG plots");

  auto* inspect = app.add_subcommand("inspect", "summarize a trained checkpoint");
  inspect->add_option("--checkpoint", checkpoint, "model checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (gen->parsed()) return rolnn::cli::cmd_gen_data(config, out);
  if (train->parsed())
    return rolnn::cli::cmd_train(config, seed, seed_opt->count() > 0, out);
  if (eval->parsed()) return rolnn::cli::cmd_eval(checkpoint, dataset, h_test, scheme, out, plots);
  if (inspect->parsed()) return rolnn::cli::cmd_inspect(checkpoint);
  return 1;
}
