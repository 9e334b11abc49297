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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcabench/faultspace.h"
#include "rcabench/telemetry.h"
#include "rcabench/topology.h"
#include "rcabench/workload.h"

namespace rcabench {

struct CaseProtocol {
  double warmup_s = 240.0;
  double normal_s = 240.0;
  double fault_s = 240.0;
  double timeout_ms = 10000.0;
  int retries = 0;

  // Engine constants.
  double noise_sigma = 0.2;        // lognormal service-time noise
  double contention_clamp = 10.0;  // max service-time inflation
  double oom_kill_load = 4.0;      // K_oom, in multiples of capacity
  double oom_grace_s = 5.0;        // G
  double restart_s = 10.0;         // PodFailure up-time between outages

  // Modalities written to the bundle.
  bool emit_metrics = true;
  bool emit_logs = true;
  bool emit_traces = true;

  void Validate() const;
  double TotalSeconds() const { return warmup_s + normal_s + fault_s; }
  CaseWindows Windows() const;
};

CaseProtocol ParseCaseProtocol(const nlohmann::json& doc);
nlohmann::json CaseProtocolToJson(const CaseProtocol& protocol);

// Service-time multiplier: min(clamp, 1 + utilization + stress_load).
double ContentionFactor(double utilization, double stress_load, double clamp);

// Effective stress of a CPU or memory stress spec at case time t. Loads
// above K_oom are killed after the grace period and contribute nothing.
struct StressState {
  double load = 0.0;
  bool oom_killed = false;
};
StressState ApplyStress(const FaultSpec& spec, const CaseProtocol& protocol,
                        double t_s);

struct CaseMeta {
  std::string case_id;
  std::optional<FaultSpec> fault;
  CaseWindows windows;
  uint64_t seed = 0;
  // Arrivals whose root span lies in the normal or fault window.
  uint64_t arrivals = 0;

  nlohmann::json ToJson() const;
};

struct CaseOutput {
  TelemetryBundle bundle;
  CaseMeta meta;
};

struct RequestTelemetry {
  std::vector<Span> spans;
  std::vector<LogRecord> logs;
};

// Stateful single-case simulator. Requests must be executed in arrival
// order; contention is derived from the work recorded by earlier requests.
class Simulator {
 public:
  Simulator(const Topology& topology, const CaseProtocol& protocol,
            const std::optional<FaultSpec>& fault, uint64_t seed);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Runs one request and returns its full span tree and logs, before any
  // window filtering or timestamp skew.
  RequestTelemetry ExecuteRequest(const RequestArrival& arrival,
                                  uint64_t index);

  // Per-second metric samples for [from_s, to_s).
  std::vector<MetricPoint> EmitMetrics(int64_t from_s, int64_t to_s) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Warm-up, normal window, then fault window with the effect active. The
// workload is re-seeded from `seed`, which determines the case entirely.
// The fault window comes from the protocol; the spec's own window is
// overwritten.
CaseOutput RunCase(const Topology& topology, const WorkloadProfile& profile,
                   const CaseProtocol& protocol,
                   const std::optional<FaultSpec>& fault, uint64_t seed,
                   const std::string& case_id = "case");

}  // namespace rcabench
