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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcabench/common.h"
#include "rcabench/telemetry.h"
#include "rcabench/topology.h"

namespace rcabench {

struct AlertSet {
  std::map<std::string, double> metric;
  std::map<std::string, double> trace;
  std::map<std::string, double> log;
};

struct RankedCandidates {
  std::vector<std::pair<std::string, double>> ranking;
  double seconds = 0.0;

  // 1-based rank of `service`, or 0 when absent.
  std::size_t RankOf(const std::string& service) const;
};

// Sorts by (score desc, name asc) and drops repeated services.
RankedCandidates MakeRanking(std::vector<std::pair<std::string, double>> scores);

struct SimpleRcaOptions {
  double metric_weight = 1.0;
  double trace_weight = 1.0;
  double log_weight = 1.0;
  double trace_multiplier = 3.0;
  bool binary_trace_alerts = false;
  std::vector<std::string> log_keywords = {"ERROR", "FAIL", "EXCEPTION"};
  double log_floor = 5.0;
  double log_multiplier = 2.0;
};

SimpleRcaOptions ParseSimpleRcaOptions(const nlohmann::json& doc);

// Per (service, metric) series pooled over pods: one alert per fault-window
// sample above max(mean + 3 std, P95) of the normal window.
std::map<std::string, double> MetricAlerts(const TelemetryBundle& bundle);

std::map<std::string, double> TraceAlerts(const TelemetryBundle& bundle,
                                          const SimpleRcaOptions& options = {});

std::map<std::string, double> LogAlerts(const TelemetryBundle& bundle,
                                        const SimpleRcaOptions& options = {});

AlertSet ComputeAlerts(const TelemetryBundle& bundle,
                       const SimpleRcaOptions& options = {});

// Weighted alert sum; every topology service is ranked.
RankedCandidates RankAlerts(const AlertSet& alerts,
                            const std::vector<std::string>& services,
                            const SimpleRcaOptions& options = {});

RankedCandidates SimpleRca(const TelemetryBundle& bundle, const Topology& topology,
                           const SimpleRcaOptions& options = {});

RankedCandidates RandomBaseline(const std::vector<std::string>& services,
                                uint64_t seed);

std::vector<std::string> ServiceNames(const Topology& topology);

// What an algorithm may see of a case. The label is deliberately absent.
struct RcaInput {
  const TelemetryBundle* bundle = nullptr;
  const Topology* topology = nullptr;
  std::string case_id;
  std::string case_dir;
};

struct TrainingCase {
  std::string case_dir;
  CaseWindows windows;
};

class PluginError : public Error {
 public:
  using Error::Error;
};

class RcaAlgorithm {
 public:
  virtual ~RcaAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual bool requires_training() const { return false; }
  virtual void Train(const std::vector<TrainingCase>& /*cases*/) {}
  // Throws PluginError when an external algorithm fails.
  virtual RankedCandidates Rank(const RcaInput& input) = 0;
};

class SimpleRcaAlgorithm : public RcaAlgorithm {
 public:
  explicit SimpleRcaAlgorithm(SimpleRcaOptions options = {})
      : options_(std::move(options)) {}
  std::string name() const override { return "simple_rca"; }
  RankedCandidates Rank(const RcaInput& input) override;

 private:
  SimpleRcaOptions options_;
};

class RandomAlgorithm : public RcaAlgorithm {
 public:
  explicit RandomAlgorithm(uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  // Seeded per case id, so rankings do not depend on evaluation order.
  RankedCandidates Rank(const RcaInput& input) override;

 private:
  uint64_t seed_;
};

struct PluginSpec {
  std::string name;
  std::string command;  // run with /bin/sh -c
  bool trainable = false;
  double timeout_s = 300.0;
};

// Out-of-process algorithm speaking the line protocol on stdin/stdout:
//   train <case_dir> <normal_start> <fault_start> <fault_end>   (no reply)
//   fit                                                        -> ok
//   rank <case_dir> <normal_start> <fault_start> <fault_end>   -> lines of
//        "<service>\t<score>" terminated by "end"
// Window boundaries are decimal seconds. The process is restarted after a
// failure.
class PluginAlgorithm : public RcaAlgorithm {
 public:
  explicit PluginAlgorithm(PluginSpec spec);
  ~PluginAlgorithm() override;
  std::string name() const override { return spec_.name; }
  bool requires_training() const override { return spec_.trainable; }
  void Train(const std::vector<TrainingCase>& cases) override;
  RankedCandidates Rank(const RcaInput& input) override;

 private:
  void Start();
  void Stop();
  void Send(const std::string& line);
  std::string ReadLine();

  PluginSpec spec_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::vector<TrainingCase> training_;
};

struct AlgorithmConfig {
  uint64_t seed = 1;
  SimpleRcaOptions simple;
  std::map<std::string, PluginSpec> plugins;
};

AlgorithmConfig ParseAlgorithmConfig(const nlohmann::json& doc, uint64_t seed);

// "simple_rca", "random", or a configured plugin name. Throws ConfigError
// for unknown names.
std::unique_ptr<RcaAlgorithm> MakeAlgorithm(const std::string& name,
                                            const AlgorithmConfig& config);

}  // namespace rcabench
