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
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcabench/common.h"
#include "rcabench/rca.h"
#include "rcabench/telemetry.h"
#include "rcabench/topology.h"

namespace rcabench {

inline constexpr uint64_t kAbsentRank = std::numeric_limits<uint64_t>::max();

struct CaseResult {
  std::string case_id;
  std::string algorithm;
  std::string fault_type;
  std::string true_service;
  uint64_t rank = kAbsentRank;
  double seconds = 0.0;
  bool flagged = false;
  std::string note;
};

// Ranks are 1-based; kAbsentRank stands for a missing root cause. All
// three throw EmptyInputError on an empty set.
double TopK(const std::vector<uint64_t>& ranks, uint64_t k);
double AvgK(const std::vector<uint64_t>& ranks, uint64_t k);
double Mrr(const std::vector<uint64_t>& ranks);

struct MetricRow {
  std::string algorithm;
  std::string fault_type;  // empty for the overall row
  uint64_t cases = 0;
  uint64_t flagged = 0;
  double top1 = 0, top3 = 0, top5 = 0, avg3 = 0, avg5 = 0, mrr = 0;
  double mean_seconds = 0;
};

MetricRow SummarizeResults(const std::vector<CaseResult>& results);

struct EvalReport {
  std::vector<MetricRow> rows;
  std::vector<MetricRow> breakdown;
  std::vector<CaseResult> results;
  double load_seconds = 0.0;
};

class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};

struct EvalCase {
  std::string case_id;
  std::string case_dir;
  std::string fault_type;
  std::string true_service;
};

struct EvalOptions {
  double train_fraction = 0.8;
  uint64_t seed = 1;
  int jobs = 1;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per fault type: cases shuffled with a seeded stream, the first
// round(fraction * n) go to training.
Split StratifiedSplit(const std::vector<EvalCase>& cases, double train_fraction,
                      uint64_t seed);

// Algorithms without training rank every case; trainable ones are trained
// on the split's training part and rank its test part. A plugin failure or
// an empty ranking yields an absent rank and a flag.
EvalReport RunEvaluation(const std::vector<EvalCase>& cases, const Topology& topology,
                         const std::vector<std::string>& algorithms,
                         const AlgorithmConfig& config, const EvalOptions& options);

void WriteEvalReport(const EvalReport& report, const std::string& out_dir);

struct DatasetStats {
  uint64_t cases = 0;
  uint64_t services = 0;
  double coverage = 0.0;
  double qps_mean = 0.0;
  double qps_max = 0.0;
  uint64_t max_depth = 0;
  uint64_t traces = 0;
  uint64_t spans = 0;
  uint64_t logs = 0;
  uint64_t metrics = 0;
  double duration_s = 0.0;
  std::map<std::string, uint64_t> fault_types;
};

// Longest root-to-leaf path in edges, over all traces.
uint64_t MaxCallDepth(const std::vector<Span>& spans);

// Folds one case into running statistics.
class DatasetStatsBuilder {
 public:
  explicit DatasetStatsBuilder(std::vector<std::string> services);
  void Add(const TelemetryBundle& bundle, const std::string& fault_type);
  DatasetStats Finish() const;

 private:
  std::vector<std::string> services_;
  std::map<std::string, bool> seen_;
  DatasetStats stats_;
};

void WriteDatasetStats(const DatasetStats& stats, const std::string& path);

struct ScalabilityPoint {
  uint64_t volume = 0;
  uint64_t traces = 0;
  double seconds = 0.0;  // median
  int runs = 0;
  bool timed_out = false;
};

struct ScalabilityOptions {
  std::vector<uint64_t> volumes = {2000, 6000, 10000, 14000, 18000};
  int runs = 3;
  int cores = 4;
  double window_s = 60.0;  // each of the normal and fault windows
  double timeout_s = 600.0;
  uint64_t seed = 1;
};

// Cores actually granted by the affinity mask: min(requested, available).
int RestrictToCores(int cores);

// Generates one case per volume and times the algorithm on it with the
// process pinned to the core allotment.
std::vector<ScalabilityPoint> ScalabilityRun(
    const std::function<std::unique_ptr<RcaAlgorithm>()>& make_algorithm,
    const Topology& topology, const ScalabilityOptions& options,
    int* granted_cores = nullptr);

void WriteScalability(const std::vector<ScalabilityPoint>& points,
                      const std::string& path);

}  // namespace rcabench
