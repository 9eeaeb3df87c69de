#pragma once

#include <string>

#include "dynlight/config.hpp"

namespace dynlight::cli {

struct Context {
  ExperimentConfig cfg;
  std::string out_root;  // --out, DYNLIGHT_OUT_ROOT, or ./runs
  std::string run_dir;   // resolved by prepare_run_dir
};

/// Creates and returns the run directory: out_root/<cfg.run_dir> when
/// pinned, otherwise a fresh timestamped out_root/<command>-<stamp>[-n].
std::string prepare_run_dir(Context& ctx, const std::string& command);

int cmd_gen_data(Context& ctx);
int cmd_train(Context& ctx);
int cmd_eval(Context& ctx);
int cmd_compare(Context& ctx);
int cmd_transfer(Context& ctx);
int cmd_sweep(Context& ctx, const std::string& axis);

}  // namespace dynlight::cli
