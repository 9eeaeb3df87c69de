#pragma once

#include <string>
#include <vector>

#include "dynlight/net.hpp"

namespace dynlight {

struct VehicleSpec {
  std::string id;
  int enter_time = 0;       // seconds, nonnegative
  std::vector<int> route;   // lane indices, boundary entry -> boundary exit
};

struct FlowMeta {
  std::string source;
  double rate = 0.0;  // nominal arrivals, vehicles/second
};

/// Vehicle demand: specs sorted by enter time, ids unique. Immutable after
/// generation/load.
struct FlowSet {
  std::vector<VehicleSpec> vehicles;
  FlowMeta meta;

  bool operator==(const FlowSet& other) const;
};

struct TurnRatios {
  double straight = 0.6;
  double left = 0.2;
  double right = 0.2;
};

/// Poisson arrivals at the aggregate `rate`, split uniformly over boundary
/// entry roads; routes follow sampled turns (straight/left/right ratios) at
/// every intersection until the walk leaves the network. Deterministic for
/// a given seed. `entry_weights`, when non-empty, reweights the entry roads
/// (aligned with Network::entry_roads(), need not be normalized) so presets
/// can model directional demand; empty keeps the uniform split.
FlowSet gen_poisson_flow(const Network& net, double rate, int horizon_s,
                         uint64_t seed, TurnRatios ratios = {},
                         std::vector<double> entry_weights = {});

/// Throws ValidationError naming the first vehicle whose route is not
/// connected by movements or does not span boundary to boundary.
void validate_flow(const FlowSet& flow, const Network& net);

FlowSet load_flow(const std::string& path, const Network& net,
                  std::vector<std::string>* warnings = nullptr);
void save_flow(const FlowSet& flow, const Network& net,
               const std::string& path);

}  // namespace dynlight
