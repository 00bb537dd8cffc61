// Command-line front end: train / sweep / ablate / convert.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "secomm/errors.hpp"
#include "secomm/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::string> dataset;
  std::optional<std::string> format;
  std::optional<std::string> output_dir;
  std::optional<int> num_communities;
  std::optional<std::uint64_t> seed;
  std::optional<int> num_runs;
  bool parallel = false;
  bool dump_similarities = false;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config_path, "JSON run configuration")->required();
  app->add_option("--dataset", args.dataset, "override: dataset path");
  app->add_option("--format", args.format,
                  "override: dataset format (edge-tsv+feature-csv | planetoid-index)");
  app->add_option("--out", args.output_dir, "override: output directory");
  app->add_option("--communities,-K", args.num_communities, "override: number of communities");
  app->add_option("--seed", args.seed, "override: base seed");
  app->add_option("--runs", args.num_runs, "override: number of runs");
  app->add_flag("--parallel", args.parallel, "run repetitions concurrently");
  app->add_flag("--dump-similarities", args.dump_similarities,
                "write similarities.tsv / extreme_pairs.tsv per run");
}

secomm::RunConfig resolve(const CommonArgs& args) {
  secomm::RunConfig cfg = secomm::load_run_config(args.config_path);
  if (args.dataset) cfg.dataset = *args.dataset;
  if (args.format) cfg.format = secomm::graph_format_from_string(*args.format);
  if (args.output_dir) cfg.output_dir = *args.output_dir;
  if (args.num_communities) cfg.num_communities = *args.num_communities;
  if (args.seed) cfg.seed = *args.seed;
  if (args.num_runs) cfg.num_runs = *args.num_runs;
  if (args.parallel) cfg.parallel_runs = true;
  if (args.dump_similarities) cfg.dump_similarities = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEComm: self-expressive community detection on attributed graphs"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "run the full pipeline");
  add_common(train_cmd, train_args);

  CommonArgs sweep_args;
  std::string sweep_parameter;
  std::vector<double> sweep_values;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "hyperparameter sensitivity sweep");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--parameter", sweep_parameter,
                        "one of: embedding_dim, theta_low, num_batches, batch_size")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "values to sweep")->required();

  CommonArgs ablate_args;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "model ablation study");
  add_common(ablate_cmd, ablate_args);

  std::string convert_input, convert_format = "planetoid-index", convert_out;
  CLI::App* convert_cmd =
      app.add_subcommand("convert", "convert a dataset to the canonical directory layout");
  convert_cmd->add_option("--input", convert_input, "input path (directory or file prefix)")
      ->required();
  convert_cmd->add_option("--input-format", convert_format, "input format");
  convert_cmd->add_option("--out", convert_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return secomm::cmd_train(resolve(train_args));
    if (*sweep_cmd) return secomm::cmd_sweep(resolve(sweep_args), sweep_parameter, sweep_values);
    if (*ablate_cmd) return secomm::cmd_ablate(resolve(ablate_args));
    if (*convert_cmd)
      return secomm::cmd_convert(convert_input,
                                 secomm::graph_format_from_string(convert_format), convert_out);
  } catch (const secomm::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
