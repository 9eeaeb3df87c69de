#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace dynlight;

namespace {

std::vector<uint64_t> parse_seeds(const std::string& csv) {
  std::vector<uint64_t> seeds;
  size_t start = 0;
  while (start < csv.size()) {
    size_t comma = csv.find(',', start);
    seeds.push_back(std::stoull(csv.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynlight: queue-based traffic-signal benchmark and "
               "multi-level control experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string out_dir;
  std::string seeds_csv;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "experiment config file (JSON)");
  app.add_option("--out", out_dir, "output root (default $DYNLIGHT_OUT_ROOT "
                                   "or ./runs)");
  app.add_option("--seeds", seeds_csv, "comma-separated seed list");
  app.add_option("--override", overrides, "config override key=value");

  auto* gen = app.add_subcommand("gen-data", "write roadnet and flow files");
  auto* train = app.add_subcommand("train", "train the duration network");
  auto* eval = app.add_subcommand("eval", "evaluate controllers, write "
                                          "episode results");
  auto* compare =
      app.add_subcommand("compare", "controllers x datasets comparison");
  auto* transfer =
      app.add_subcommand("transfer", "cross-dataset transfer matrix");
  auto* sweep = app.add_subcommand("sweep", "axis study (trains per value)");
  std::string axis;
  sweep->add_option("axis", axis,
                    "duration_sets | phase_sets | encoders | phase_policies")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cli::Context ctx;
    ctx.cfg = config_path.empty() ? default_config(overrides)
                                  : load_config(config_path, overrides);
    if (!seeds_csv.empty()) ctx.cfg.seeds = parse_seeds(seeds_csv);
    if (!out_dir.empty()) {
      ctx.out_root = out_dir;
    } else if (const char* env = std::getenv("DYNLIGHT_OUT_ROOT")) {
      ctx.out_root = env;
    } else {
      ctx.out_root = "runs";
    }

    if (gen->parsed()) return cli::cmd_gen_data(ctx);
    if (train->parsed()) return cli::cmd_train(ctx);
    if (eval->parsed()) return cli::cmd_eval(ctx);
    if (compare->parsed()) return cli::cmd_compare(ctx);
    if (transfer->parsed()) return cli::cmd_transfer(ctx);
    if (sweep->parsed()) return cli::cmd_sweep(ctx, axis);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
