#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "dynlight/control.hpp"
#include "svg.hpp"

namespace dynlight::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&t));
  return buf;
}

struct BuiltController {
  std::unique_ptr<Controller> ctl;
  std::unique_ptr<QNetwork> net;  // owned by learned controllers
};

BuiltController build_controller(const ControllerSpec& spec,
                                 const ExperimentConfig& cfg) {
  BuiltController out;
  if (spec.name == "fixedtime") {
    out.ctl = std::make_unique<FixedTimeController>(spec.fixed_duration);
  } else if (spec.name == "mql") {
    out.ctl = std::make_unique<MqlController>(spec.fixed_duration);
  } else if (spec.name == "emp") {
    out.ctl = std::make_unique<EmpController>(spec.fixed_duration);
  } else if (spec.name == "dynlight" || spec.name == "dynlight-c") {
    if (spec.checkpoint.empty())
      throw ConfigError("controller '" + spec.name +
                        "' needs a checkpoint path");
    auto [net, meta] = load_checkpoint(spec.checkpoint);
    out.net = std::make_unique<QNetwork>(std::move(net));
    DurationActionSet durations;
    durations.name = meta.duration_set_name;
    durations.seconds = meta.durations;
    if (spec.name == "dynlight-c") {
      out.ctl = make_dynlight_c(out.net.get(), meta, cfg.durations);
    } else {
      out.ctl = make_dynlight(out.net.get(), cfg.phase_policy,
                              encoder_from_string(meta.encoder), durations);
    }
  } else {
    throw ConfigError("unknown controller '" + spec.name + "'");
  }
  return out;
}

struct CellResult {
  std::string method, dataset;
  uint64_t seed = 0;
  EpisodeResult episode;
};

void write_summary_csv(const std::string& path,
                       const std::vector<CellResult>& cells) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << "method,dataset,seed,adjusted_att,throughput,undrained\n";
  for (const CellResult& c : cells) {
    out << c.method << "," << c.dataset << "," << c.seed << ",";
    if (c.episode.adjusted_att) out << fmt2(*c.episode.adjusted_att);
    out << "," << c.episode.throughput << ","
        << (c.episode.undrained ? 1 : 0) << "\n";
  }
}

// mean adjusted ATT per (method, dataset) for plotting
std::map<std::pair<std::string, std::string>, double> aggregate(
    const std::vector<CellResult>& cells) {
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const CellResult& c : cells) {
    if (!c.episode.adjusted_att) continue;
    auto& slot = acc[{c.method, c.dataset}];
    slot.first += *c.episode.adjusted_att;
    slot.second += 1;
  }
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [key, slot] : acc) out[key] = slot.first / slot.second;
  return out;
}

void warn_undrained(const std::vector<CellResult>& cells) {
  for (const CellResult& c : cells)
    if (c.episode.undrained)
      std::cerr << "warning: " << c.method << " on " << c.dataset << " seed "
                << c.seed << " hit the drain cap (result is a lower bound)\n";
}

}  // namespace

std::string prepare_run_dir(Context& ctx, const std::string& command) {
  fs::path root = ctx.out_root.empty() ? "runs" : ctx.out_root;
  fs::path dir;
  if (!ctx.cfg.run_dir.empty()) {
    dir = root / ctx.cfg.run_dir;
  } else {
    std::string base = command + "-" + timestamp();
    dir = root / base;
    for (int n = 1; fs::exists(dir); ++n)
      dir = root / (base + "-" + std::to_string(n));
  }
  fs::create_directories(dir);
  ctx.run_dir = dir.string();
  return ctx.run_dir;
}

int cmd_gen_data(Context& ctx) {
  if (ctx.cfg.datasets.empty())
    throw ConfigError("gen-data: no datasets configured");
  prepare_run_dir(ctx, "gen-data");
  for (const DatasetSpec& spec : ctx.cfg.datasets) {
    Dataset base = materialize_dataset(spec, ctx.cfg.seeds.front());
    std::string roadnet = ctx.run_dir + "/" + spec.name + ".roadnet.json";
    save_roadnet(base.network, roadnet);
    std::cout << roadnet << "\n";
    for (uint64_t seed : ctx.cfg.seeds) {
      Dataset d = materialize_dataset(spec, seed);
      std::string flow = ctx.run_dir + "/" + spec.name + ".s" +
                         std::to_string(seed) + ".flow.json";
      save_flow(d.flow, d.network, flow);
      std::cout << flow << "\n";
    }
  }
  return 0;
}

int cmd_train(Context& ctx) {
  if (ctx.cfg.datasets.empty())
    throw ConfigError("train: no datasets configured");
  prepare_run_dir(ctx, "train");

  std::ofstream curve_csv(ctx.run_dir + "/curves.csv");
  curve_csv << "dataset,seed,episode,adjusted_att\n";
  std::ofstream summary(ctx.run_dir + "/train_summary.csv");
  summary << "dataset,mean_adjusted_att,stddev,seeds\n";

  for (const DatasetSpec& spec : ctx.cfg.datasets) {
    std::vector<SeedSeries> series;
    for (uint64_t seed : ctx.cfg.seeds) {
      Dataset d = materialize_dataset(spec, seed);
      TrainConfig tc = ctx.cfg.train_config(spec);
      TrainResult tr = train_dynlight(d.network, d.flow, tc, seed);
      std::string ckpt = ctx.run_dir + "/ckpt-" + spec.name + "-s" +
                         std::to_string(seed) + ".json";
      save_checkpoint(tr.net, tr.meta, ckpt);
      std::cout << ckpt << "\n";
      for (size_t ep = 0; ep < tr.curve.size(); ++ep)
        curve_csv << spec.name << "," << seed << "," << ep << ","
                  << fmt2(tr.curve[ep]) << "\n";
      SeedSeries s;
      s.seed = seed;
      s.episode_att = tr.curve;
      series.push_back(std::move(s));
    }
    SummaryRow row = summarize(series);
    summary << spec.name << "," << fmt2(row.mean) << ","
            << (row.stddev ? fmt2(*row.stddev) : "") << ","
            << ctx.cfg.seeds.size() << "\n";
    if (row.truncated)
      std::cerr << "warning: fewer than 10 evaluation episodes for "
                << spec.name << "; summary uses all of them\n";
  }
  return 0;
}

namespace {

std::vector<CellResult> run_cells(const Context& ctx) {
  std::vector<CellResult> cells;
  for (const DatasetSpec& spec : ctx.cfg.datasets) {
    for (uint64_t seed : ctx.cfg.seeds) {
      Dataset d = materialize_dataset(spec, seed);
      for (const ControllerSpec& cspec : ctx.cfg.controllers) {
        BuiltController built = build_controller(cspec, ctx.cfg);
        CellResult cell;
        cell.method = cspec.name;
        cell.dataset = spec.name;
        cell.seed = seed;
        cell.episode =
            run_episode(d.network, d.flow, *built.ctl, spec.horizon_s,
                        /*drain=*/true, seed, ctx.cfg.sim);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace

int cmd_eval(Context& ctx) {
  if (ctx.cfg.controllers.empty() || ctx.cfg.datasets.empty())
    throw ConfigError("eval: need at least one controller and one dataset");
  prepare_run_dir(ctx, "eval");

  std::vector<CellResult> cells;
  for (const DatasetSpec& spec : ctx.cfg.datasets) {
    for (uint64_t seed : ctx.cfg.seeds) {
      Dataset d = materialize_dataset(spec, seed);
      for (const ControllerSpec& cspec : ctx.cfg.controllers) {
        BuiltController built = build_controller(cspec, ctx.cfg);
        SimParams params = ctx.cfg.sim;
        if (params.duration_actions.empty())
          params.duration_actions = built.ctl->duration_actions();
        Sim sim(d.network, d.flow, params);
        CellResult cell;
        cell.method = cspec.name;
        cell.dataset = spec.name;
        cell.seed = seed;
        cell.episode =
            run_episode_on(sim, *built.ctl, spec.horizon_s, true, seed);
        std::string stem = ctx.run_dir + "/" + cspec.name + "-" + spec.name +
                           "-s" + std::to_string(seed);
        std::ofstream(stem + ".episode.json") << cell.episode.to_json();
        if (ctx.cfg.dump_trips)
          dump_trips_csv(sim.trip_log(), sim.flow(), stem + ".trips.csv");
        cells.push_back(std::move(cell));
      }
    }
  }
  write_summary_csv(ctx.run_dir + "/eval_summary.csv", cells);
  warn_undrained(cells);
  return 0;
}

int cmd_compare(Context& ctx) {
  if (ctx.cfg.controllers.size() < 1 || ctx.cfg.datasets.empty())
    throw ConfigError("compare: need controllers and at least one dataset");
  prepare_run_dir(ctx, "compare");

  std::vector<CellResult> cells = run_cells(ctx);
  write_summary_csv(ctx.run_dir + "/summary.csv", cells);

  auto agg = aggregate(cells);
  std::vector<std::string> series;
  for (const ControllerSpec& c : ctx.cfg.controllers)
    series.push_back(c.name);
  std::vector<svg::BarGroup> groups;
  for (const DatasetSpec& d : ctx.cfg.datasets) {
    svg::BarGroup g;
    g.label = d.name;
    for (const std::string& method : series) {
      auto it = agg.find({method, d.name});
      g.values.push_back(it == agg.end() ? std::nan("") : it->second);
    }
    groups.push_back(std::move(g));
  }
  svg::write_grouped_bars(ctx.run_dir + "/compare.svg",
                          "Adjusted average travel time (lower is better)",
                          series, groups, "seconds");
  warn_undrained(cells);
  std::cout << ctx.run_dir << "/summary.csv\n";
  return 0;
}

int cmd_transfer(Context& ctx) {
  if (ctx.cfg.datasets.size() < 2)
    throw ConfigError("transfer: need at least two datasets");
  prepare_run_dir(ctx, "transfer");

  struct Trained {
    std::string dataset;
    QNetwork net;
    CheckpointMeta meta;
    double t_train = 0;
  };
  std::vector<Trained> models;

  for (const DatasetSpec& spec : ctx.cfg.datasets) {
    Trained model;
    model.dataset = spec.name;
    auto it = ctx.cfg.checkpoints.find(spec.name);
    if (it != ctx.cfg.checkpoints.end()) {
      auto [net, meta] = load_checkpoint(it->second);
      model.net = std::move(net);
      model.meta = meta;
      model.t_train = -1;  // computed below from an evaluation run
    } else {
      Dataset d = materialize_dataset(spec, ctx.cfg.seeds.front());
      TrainConfig tc = ctx.cfg.train_config(spec);
      TrainResult tr =
          train_dynlight(d.network, d.flow, tc, ctx.cfg.seeds.front());
      model.net = std::move(tr.net);
      model.meta = tr.meta;
      model.t_train = tr.final_score;
      save_checkpoint(model.net, model.meta,
                      ctx.run_dir + "/ckpt-" + spec.name + ".json");
    }
    if (model.meta.durations != ctx.cfg.durations.seconds)
      throw ConfigError("checkpoint for '" + spec.name +
                        "' uses a different duration action set");
    models.push_back(std::move(model));
  }

  auto eval_on = [&](Trained& model, const DatasetSpec& spec) {
    double total = 0;
    for (uint64_t seed : ctx.cfg.seeds) {
      Dataset d = materialize_dataset(spec, seed);
      DurationActionSet durations;
      durations.name = model.meta.duration_set_name;
      durations.seconds = model.meta.durations;
      auto agent =
          make_dynlight(&model.net, ctx.cfg.phase_policy,
                        encoder_from_string(model.meta.encoder), durations);
      EpisodeResult r = run_episode(d.network, d.flow, *agent, spec.horizon_s,
                                    true, seed, ctx.cfg.sim);
      total += r.adjusted_att.value_or(0.0);
    }
    return total / ctx.cfg.seeds.size();
  };

  // externally supplied checkpoints get their training-side reference from
  // an evaluation on their own dataset
  for (size_t i = 0; i < models.size(); ++i)
    if (models[i].t_train < 0)
      models[i].t_train = eval_on(models[i], ctx.cfg.datasets[i]);

  std::vector<std::vector<double>> matrix(
      models.size(), std::vector<double>(models.size(), 0.0));
  for (size_t i = 0; i < models.size(); ++i)
    for (size_t j = 0; j < ctx.cfg.datasets.size(); ++j)
      matrix[i][j] = transferability(models[i].t_train,
                                     eval_on(models[i], ctx.cfg.datasets[j]));

  std::ofstream csv(ctx.run_dir + "/transfer.csv");
  csv << "train_dataset";
  for (const DatasetSpec& d : ctx.cfg.datasets) csv << "," << d.name;
  csv << "\n";
  for (size_t i = 0; i < models.size(); ++i) {
    csv << models[i].dataset;
    for (size_t j = 0; j < matrix[i].size(); ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", matrix[i][j]);
      csv << "," << buf;
    }
    csv << "\n";
  }

  std::vector<std::string> labels;
  for (const DatasetSpec& d : ctx.cfg.datasets) labels.push_back(d.name);
  svg::write_heatmap(ctx.run_dir + "/transfer.svg",
                     "Transferability (lower is better)", labels, labels,
                     matrix);
  std::cout << ctx.run_dir << "/transfer.csv\n";
  return 0;
}

int cmd_sweep(Context& ctx, const std::string& axis) {
  if (ctx.cfg.datasets.empty())
    throw ConfigError("sweep: no datasets configured");
  prepare_run_dir(ctx, "sweep");

  struct AxisValue {
    std::string label;
    std::function<void(ExperimentConfig&, DatasetSpec&)> apply;
  };
  std::vector<AxisValue> values;
  if (axis == "duration_sets") {
    for (const std::string& name : duration_set_names())
      values.push_back({name, [name](ExperimentConfig& c, DatasetSpec&) {
                          c.durations = duration_set_by_name(name);
                        }});
  } else if (axis == "phase_sets") {
    for (int phases : {4, 8})
      values.push_back({std::to_string(phases) + "-phase",
                        [phases](ExperimentConfig&, DatasetSpec& d) {
                          d.phases = phases;
                        }});
  } else if (axis == "encoders") {
    for (const char* name : {"nv", "tmp", "ql", "nvs"})
      values.push_back({name, [name](ExperimentConfig& c, DatasetSpec&) {
                          c.encoder = encoder_from_string(name);
                        }});
  } else if (axis == "phase_policies") {
    for (const char* name : {"mql", "emp"})
      values.push_back({name, [name](ExperimentConfig& c, DatasetSpec&) {
                          c.phase_policy = phase_policy_from_string(name);
                        }});
  } else {
    throw ConfigError(
        "unknown sweep axis '" + axis +
        "'; valid: duration_sets phase_sets encoders phase_policies");
  }

  std::ofstream csv(ctx.run_dir + "/sweep.csv");
  csv << "axis,value,dataset,mean_adjusted_att,stddev\n";
  std::map<std::string, std::vector<double>> by_dataset;  // label order

  for (const AxisValue& value : values) {
    for (const DatasetSpec& base_spec : ctx.cfg.datasets) {
      ExperimentConfig cfg = ctx.cfg;
      DatasetSpec spec = base_spec;
      value.apply(cfg, spec);
      std::vector<SeedSeries> series;
      for (uint64_t seed : cfg.seeds) {
        Dataset d = materialize_dataset(spec, seed);
        TrainResult tr =
            train_dynlight(d.network, d.flow, cfg.train_config(spec), seed);
        SeedSeries s;
        s.seed = seed;
        s.episode_att = tr.curve;
        series.push_back(std::move(s));
      }
      SummaryRow row = summarize(series);
      csv << axis << "," << value.label << "," << spec.name << ","
          << fmt2(row.mean) << ","
          << (row.stddev ? fmt2(*row.stddev) : "") << "\n";
      by_dataset[spec.name].push_back(row.mean);
    }
  }

  std::vector<std::string> series_names;
  for (const AxisValue& v : values) series_names.push_back(v.label);
  std::vector<svg::BarGroup> groups;
  for (const DatasetSpec& d : ctx.cfg.datasets) {
    svg::BarGroup g;
    g.label = d.name;
    g.values = by_dataset[d.name];
    groups.push_back(std::move(g));
  }
  svg::write_grouped_bars(ctx.run_dir + "/sweep.svg",
                          "Adjusted average travel time by " + axis,
                          series_names, groups, "seconds");
  std::cout << ctx.run_dir << "/sweep.csv\n";
  return 0;
}

}  // namespace dynlight::cli
