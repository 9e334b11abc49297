// Copyright 2026 The rcabench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcabench/topology.h"

namespace rcabench {

// Request rate over time. Either a piecewise-constant schedule or a mean rate
// with sinusoidal modulation, optionally capped.
struct RateSchedule {
  struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    double qps = 0.0;
  };

  // Non-empty segments take precedence over the modulated mean.
  std::vector<Segment> segments;
  double mean_qps = 16.47;
  double modulation = 0.0;      // relative amplitude in [0, 1)
  double period_s = 300.0;
  double cap_qps = 0.0;         // 0 disables the cap

  double Rate(double t) const;
  double MaxRate(double duration_s) const;
};

enum class PathPolicy { kUniform, kWeighted };

struct WorkloadProfile {
  RateSchedule rate;
  PathPolicy policy = PathPolicy::kUniform;
  // Relative workflow frequencies; workflows not listed get weight 1.
  std::map<std::string, double> workflow_weights;
  // "workflow/state" -> per-transition weights (kWeighted only).
  std::map<std::string, std::vector<double>> transition_weights;
  uint64_t seed = 1;
  double duration_s = 60.0;

  void Validate(const Topology& topology) const;
};

// Mean 16.47 QPS, +/-50% sinusoidal modulation, capped at 37.6 QPS.
WorkloadProfile ReferenceProfile(double duration_s, uint64_t seed);

WorkloadProfile ParseWorkloadProfile(const nlohmann::json& doc);
nlohmann::json WorkloadProfileToJson(const WorkloadProfile& profile);

struct RequestArrival {
  double time_s = 0.0;
  std::string workflow;
  uint64_t path_id = 0;

  bool operator==(const RequestArrival&) const = default;
};

// Open-loop Poisson arrivals (thinned against the schedule's peak rate),
// each assigned a workflow and an execution path. Deterministic in the
// profile seed.
std::vector<RequestArrival> GenerateArrivals(const WorkloadProfile& profile,
                                             const Topology& topology);

}  // namespace rcabench
