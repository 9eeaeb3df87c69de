#include "dynlight/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dynlight {

using nlohmann::json;

std::optional<double> adjusted_att(const TripLog& log) {
  if (log.trips.empty()) return std::nullopt;
  double total = 0;
  for (const TripRecord& t : log.trips) {
    int exit = t.exit >= 0 ? t.exit : log.end_clock;
    total += exit - t.enter;
  }
  return total / static_cast<double>(log.trips.size());
}

std::optional<double> exited_only_att(const TripLog& log) {
  double total = 0;
  int n = 0;
  for (const TripRecord& t : log.trips) {
    if (t.exit < 0) continue;
    total += t.exit - t.enter;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / n;
}

double transferability(double t_train, double t_transfer) {
  if (t_train <= 0)
    throw InvalidArgument("transferability: training travel time must be > 0");
  return t_transfer / t_train - 1.0;
}

SummaryRow summarize(const std::vector<SeedSeries>& seeds, int last_n) {
  if (seeds.empty()) throw InvalidArgument("summarize: no seed series");
  SummaryRow row;
  std::vector<double> per_seed;
  for (const SeedSeries& s : seeds) {
    if (s.episode_att.empty())
      throw InvalidArgument("summarize: empty episode series for seed " +
                            std::to_string(s.seed));
    int n = std::min<int>(last_n, static_cast<int>(s.episode_att.size()));
    if (n < last_n) row.truncated = true;
    double sum = 0;
    for (int i = static_cast<int>(s.episode_att.size()) - n;
         i < static_cast<int>(s.episode_att.size()); ++i)
      sum += s.episode_att[i];
    per_seed.push_back(sum / n);
    row.episodes_used = n;
  }
  double mean = 0;
  for (double v : per_seed) mean += v;
  mean /= per_seed.size();
  row.mean = mean;
  if (per_seed.size() > 1) {
    double ss = 0;
    for (double v : per_seed) ss += (v - mean) * (v - mean);
    row.stddev = std::sqrt(ss / (per_seed.size() - 1));
  }
  return row;
}

std::string EpisodeResult::to_json() const {
  json j;
  if (adjusted_att)
    j["adjusted_att"] = *adjusted_att;
  else
    j["adjusted_att"] = nullptr;
  j["throughput"] = throughput;
  j["vehicle_count"] = vehicle_count;
  j["undrained"] = undrained;
  j["end_clock"] = end_clock;
  j["queue_series"] = queue_series;
  json decs = json::array();
  for (const DecisionRec& d : decisions)
    decs.push_back({{"t", d.t},
                    {"intersection", d.intersection},
                    {"phase", d.phase},
                    {"duration", d.duration}});
  j["decisions"] = std::move(decs);
  return j.dump(2);
}

void dump_trips_csv(const TripLog& log, const FlowSet& flow,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write trip csv '" + path + "'");
  out << "vehicle_id,enter,exit\n";
  for (size_t i = 0; i < log.trips.size(); ++i) {
    out << flow.vehicles[i].id << "," << log.trips[i].enter << ",";
    if (log.trips[i].exit >= 0) out << log.trips[i].exit;
    out << "\n";
  }
}

}  // namespace dynlight
