#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynlight/sim.hpp"

namespace dynlight {

struct DecisionRec {
  int t = 0;
  int intersection = 0;
  int phase = 0;
  int duration = 0;
};

struct EpisodeResult {
  std::optional<double> adjusted_att;  // seconds; empty for an empty episode
  int throughput = 0;                  // vehicles that exited
  int vehicle_count = 0;               // vehicles the episode scheduled
  bool undrained = false;
  int end_clock = 0;
  std::vector<int> queue_series;       // per-step network-wide queued count
  std::vector<DecisionRec> decisions;  // full log when recording was on

  std::string to_json() const;  // canonical, byte-stable serialization
};

/// Mean travel time over every scheduled vehicle; vehicles still in the
/// network contribute (end_clock - enter), making the figure a lower bound
/// flagged through TripLog::undrained. Empty logs yield nullopt.
std::optional<double> adjusted_att(const TripLog& log);

/// Classic mean over exited vehicles only; nullopt when none exited.
std::optional<double> exited_only_att(const TripLog& log);

/// Relative degradation when a model trained with result `t_train` is
/// evaluated elsewhere with result `t_transfer`.
double transferability(double t_train, double t_transfer);

struct SeedSeries {
  uint64_t seed = 0;
  std::vector<double> episode_att;  // evaluation episodes in order
};

struct SummaryRow {
  double mean = 0.0;
  std::optional<double> stddev;  // empty with a single seed
  int episodes_used = 0;         // per seed
  bool truncated = false;        // fewer episodes than requested
};

/// Per-seed mean of the last `last_n` evaluation episodes, then cross-seed
/// mean and standard deviation.
SummaryRow summarize(const std::vector<SeedSeries>& seeds, int last_n = 10);

void dump_trips_csv(const TripLog& log, const FlowSet& flow,
                    const std::string& path);

}  // namespace dynlight
