#include "dynlight/config.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace dynlight {

using nlohmann::json;

const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets = {
      {"jinan1", 3, 4, 400.0, 800.0, 1.75},
      {"jinan2", 3, 4, 400.0, 800.0, 1.21},
      {"jinan3", 3, 4, 400.0, 800.0, 1.53},
      {"hangzhou1", 4, 4, 800.0, 600.0, 0.83},
      {"hangzhou2", 4, 4, 800.0, 600.0, 1.94},
  };
  return presets;
}

DatasetPreset dataset_preset_by_name(const std::string& name) {
  for (const auto& p : dataset_presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : dataset_presets()) known += " " + p.name;
  throw ConfigError("unknown dataset preset '" + name + "'; known:" + known);
}

const std::vector<std::string>& known_controller_names() {
  static const std::vector<std::string> names = {"fixedtime", "mql", "emp",
                                                 "dynlight", "dynlight-c"};
  return names;
}

namespace {

void set_json_path(json& root, const std::string& path,
                   const std::string& raw) {
  json* node = &root;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("bad override path '" + path + "'");
    if (dot == std::string::npos) {
      json value;
      try {
        value = json::parse(raw);  // numbers, bools, arrays
      } catch (const json::parse_error&) {
        value = raw;  // plain string
      }
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec d;
  if (j.is_string()) {
    d.preset = j.get<std::string>();
    d.name = d.preset;
  } else {
    d.name = j.value("name", "");
    d.preset = j.value("preset", "");
    d.roadnet_path = j.value("roadnet", "");
    d.flow_path = j.value("flow", "");
    d.rows = j.value("rows", 1);
    d.cols = j.value("cols", 1);
    d.ew_length = j.value("ew_length", 300.0);
    d.ns_length = j.value("ns_length", 300.0);
    d.phases = j.value("phases", 4);
    d.free_flow_speed = j.value("free_flow_speed", 11.0);
    d.rate = j.value("rate", 0.3);
    d.horizon_s = j.value("horizon", 3600);
    d.profile = j.value("profile", "uniform");
    d.arterial_share = j.value("arterial_share", 0.9);
    if (j.contains("turn_ratios")) {
      auto r = j["turn_ratios"].get<std::vector<double>>();
      if (r.size() != 3)
        throw ConfigError("turn_ratios needs [straight, left, right]");
      d.turn_ratios = {r[0], r[1], r[2]};
    }
    if (d.name.empty()) d.name = d.preset.empty() ? "grid" : d.preset;
  }
  if (!d.preset.empty()) {
    DatasetPreset p = dataset_preset_by_name(d.preset);
    d.rows = p.rows;
    d.cols = p.cols;
    d.ew_length = p.ew_length;
    d.ns_length = p.ns_length;
    if (j.is_string() || !j.contains("rate")) d.rate = p.rate;
    if (j.is_string() || !j.contains("profile")) d.profile = "arterial";
  }
  return d;
}

ControllerSpec controller_from_json(const json& j) {
  ControllerSpec c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
  } else {
    c.name = j.value("name", "");
    c.checkpoint = j.value("checkpoint", "");
    c.fixed_duration = j.value("fixed_duration", 15);
  }
  const auto& known = known_controller_names();
  if (std::find(known.begin(), known.end(), c.name) == known.end()) {
    std::string list;
    for (const auto& n : known) list += " " + n;
    throw ConfigError("unknown controller '" + c.name + "'; valid names:" +
                      list);
  }
  return c;
}

DurationActionSet durations_from_json(const json& j) {
  if (j.is_string()) return duration_set_by_name(j.get<std::string>());
  DurationActionSet set;
  set.name = "custom";
  set.seconds = j.get<std::vector<int>>();
  validate_duration_set(set);
  return set;
}

ExperimentConfig config_from_json(json root) {
  ExperimentConfig cfg;
  if (root.contains("datasets"))
    for (const auto& j : root["datasets"])
      cfg.datasets.push_back(dataset_from_json(j));
  if (root.contains("controllers"))
    for (const auto& j : root["controllers"])
      cfg.controllers.push_back(controller_from_json(j));
  if (root.contains("phase_policy"))
    cfg.phase_policy =
        phase_policy_from_string(root["phase_policy"].get<std::string>());
  if (root.contains("encoder"))
    cfg.encoder = encoder_from_string(root["encoder"].get<std::string>());
  if (root.contains("duration_set"))
    cfg.durations = durations_from_json(root["duration_set"]);
  cfg.episodes = root.value("episodes", cfg.episodes);
  cfg.hidden = root.value("hidden", cfg.hidden);
  cfg.eps_start = root.value("eps_start", cfg.eps_start);
  cfg.eps_end = root.value("eps_end", cfg.eps_end);
  cfg.eps_frac = root.value("eps_frac", cfg.eps_frac);
  if (root.contains("seeds"))
    cfg.seeds = root["seeds"].get<std::vector<uint64_t>>();
  if (root.contains("sim")) {
    const json& s = root["sim"];
    cfg.sim.sat_rate = s.value("sat_rate", cfg.sim.sat_rate);
    cfg.sim.amber_s = s.value("amber_s", cfg.sim.amber_s);
    cfg.sim.vehicle_space_m =
        s.value("vehicle_space_m", cfg.sim.vehicle_space_m);
  }
  if (root.contains("train")) {
    const json& t = root["train"];
    cfg.train.gamma = t.value("gamma", cfg.train.gamma);
    cfg.train.lr = t.value("lr", cfg.train.lr);
    cfg.train.batch = t.value("batch", cfg.train.batch);
    cfg.train.buffer_capacity =
        t.value("buffer_capacity", cfg.train.buffer_capacity);
    cfg.train.target_sync = t.value("target_sync", cfg.train.target_sync);
    cfg.train.train_every = t.value("train_every", cfg.train.train_every);
    cfg.train.grad_clip = t.value("grad_clip", cfg.train.grad_clip);
  }
  if (root.contains("checkpoints"))
    for (auto it = root["checkpoints"].begin(); it != root["checkpoints"].end();
         ++it)
      cfg.checkpoints[it.key()] = it.value().get<std::string>();
  cfg.run_dir = root.value("run_dir", "");
  cfg.dump_trips = root.value("dump_trips", false);
  return cfg;
}

ExperimentConfig build_config(json root,
                              const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + kv + "' is not key=value");
    set_json_path(root, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config_from_json(std::move(root));
}

}  // namespace

TrainConfig ExperimentConfig::train_config(const DatasetSpec& dataset) const {
  TrainConfig tc;
  tc.phase_policy = phase_policy;
  tc.encoder = encoder;
  tc.durations = durations;
  tc.episodes = episodes;
  tc.horizon_s = dataset.horizon_s;
  tc.hidden = hidden;
  tc.eps_start = eps_start;
  tc.eps_end = eps_end;
  tc.eps_frac = eps_frac;
  tc.train = train;
  tc.sim = sim;
  return tc;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return build_config(std::move(root), overrides);
}

ExperimentConfig default_config(const std::vector<std::string>& overrides) {
  return build_config(json::object(), overrides);
}

Dataset materialize_dataset(const DatasetSpec& spec, uint64_t seed) {
  Dataset out;
  out.spec = spec;
  if (!spec.roadnet_path.empty()) {
    out.network = load_roadnet(spec.roadnet_path);
  } else {
    out.network = build_grid(spec.rows, spec.cols, spec.ew_length,
                             spec.ns_length, spec.phases,
                             spec.free_flow_speed);
  }
  if (!spec.flow_path.empty()) {
    out.flow = load_flow(spec.flow_path, out.network);
  } else {
    // distinct flows per dataset and per experiment seed
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : spec.name) {
      h ^= c;
      h *= 1099511628211ull;
    }
    std::vector<double> weights;
    if (spec.profile == "arterial") {
      const auto& entries = out.network.entry_roads();
      int west = 0;
      for (int r : entries)
        if (out.network.road(r).from_node.rfind("bW", 0) == 0) ++west;
      if (west == 0 || west == static_cast<int>(entries.size()))
        throw ConfigError(
            "arterial profile needs a generated grid with west-edge entries");
      for (int r : entries) {
        bool arterial = out.network.road(r).from_node.rfind("bW", 0) == 0;
        weights.push_back(arterial
                              ? spec.arterial_share / west
                              : (1.0 - spec.arterial_share) /
                                    (entries.size() - west));
      }
    } else if (spec.profile != "uniform") {
      throw ConfigError("unknown demand profile '" + spec.profile + "'");
    }
    out.flow = gen_poisson_flow(out.network, spec.rate, spec.horizon_s,
                                h ^ (seed * 0x9e3779b97f4a7c15ull),
                                spec.turn_ratios, std::move(weights));
  }
  return out;
}

}  // namespace dynlight
