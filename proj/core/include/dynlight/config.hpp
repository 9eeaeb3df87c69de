#pragma once

#include <map>
#include <string>
#include <vector>

#include "dynlight/control.hpp"

namespace dynlight {

/// Synthetic generator preset: grid shape plus nominal Poisson arrival
/// rate. The registry mirrors the published benchmark scenarios but every
/// preset generates synthetic demand.
struct DatasetPreset {
  std::string name;
  int rows = 1;
  int cols = 1;
  double ew_length = 300.0;
  double ns_length = 300.0;
  double rate = 0.3;  // vehicles/second
};

const std::vector<DatasetPreset>& dataset_presets();
DatasetPreset dataset_preset_by_name(const std::string& name);

struct DatasetSpec {
  std::string name;
  std::string preset;        // fills the grid/rate fields when set
  std::string roadnet_path;  // load instead of generating when set
  std::string flow_path;     // load instead of generating when set
  int rows = 1;
  int cols = 1;
  double ew_length = 300.0;
  double ns_length = 300.0;
  int phases = 4;
  double free_flow_speed = 11.0;  // applied to generated grids
  double rate = 0.3;
  int horizon_s = 3600;
  /// uniform: demand split evenly over entry roads. arterial: west-edge
  /// entries carry `arterial_share` of the demand, mirroring the directional
  /// structure of the recorded datasets the presets stand in for.
  std::string profile = "uniform";
  double arterial_share = 0.9;
  TurnRatios turn_ratios;
};

struct ControllerSpec {
  std::string name;        // fixedtime | mql | emp | dynlight | dynlight-c
  std::string checkpoint;  // required by the learned controllers
  int fixed_duration = 15;
};

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<ControllerSpec> controllers;
  /// dataset name -> checkpoint path, for transfer studies that reuse
  /// already-trained models
  std::map<std::string, std::string> checkpoints;
  PhasePolicyKind phase_policy = PhasePolicyKind::Mql;
  EncoderKind encoder = EncoderKind::NVS;
  DurationActionSet durations = duration_set_by_name("config2");
  int episodes = 80;
  int hidden = 20;
  double eps_start = 0.8;
  double eps_end = 0.05;
  double eps_frac = 0.6;
  std::vector<uint64_t> seeds = {1, 2, 3};
  SimParams sim;
  TrainParams train;
  std::string run_dir;  // pinned run directory name; empty = timestamped
  bool dump_trips = false;

  TrainConfig train_config(const DatasetSpec& dataset) const;
};

const std::vector<std::string>& known_controller_names();

/// Loads a config file and applies `key=value` overrides (dotted paths,
/// e.g. sim.amber_s=0). Unknown controller or dataset fields raise
/// ConfigError.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});
/// Built-in defaults (no file), still accepting overrides.
ExperimentConfig default_config(const std::vector<std::string>& overrides = {});

/// Materializes the dataset: builds or loads the network, generates or
/// loads the flow. `seed` perturbs generated flows only.
struct Dataset {
  DatasetSpec spec;
  Network network;
  FlowSet flow;
};
Dataset materialize_dataset(const DatasetSpec& spec, uint64_t seed);

}  // namespace dynlight
