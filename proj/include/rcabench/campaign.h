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
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcabench/eval.h"
#include "rcabench/faultspace.h"
#include "rcabench/groundtruth.h"
#include "rcabench/oracle.h"
#include "rcabench/rca.h"
#include "rcabench/simengine.h"
#include "rcabench/topology.h"
#include "rcabench/workload.h"

namespace rcabench {

struct CampaignConfig {
  Topology topology;
  WorkloadProfile profile;
  CaseProtocol protocol;
  FaultSpacePlan plan;
  nlohmann::json registry_overrides;
  OracleParams oracle;
  LabelOptions labels;
  std::vector<std::string> algorithms = {"simple_rca", "random"};
  nlohmann::json algorithm_options;
  double train_fraction = 0.8;
  ScalabilityOptions scalability;
  uint64_t controls = 0;  // fault-free cases
  std::string out_dir = "campaign";
  uint64_t seed = 1;

  FaultRegistry Registry() const;
  AlgorithmConfig Algorithms() const;
  // Resolved form: the topology is inlined, so the copy written next to the
  // cases is self-contained.
  nlohmann::json ToJson() const;
};

// Relative topology paths resolve against `base_dir`.
CampaignConfig ParseCampaignConfig(const nlohmann::json& doc,
                                   const std::string& base_dir);
CampaignConfig LoadCampaignConfig(const std::string& path);

inline constexpr std::string_view kCampaignFile = "campaign.json";
inline constexpr std::string_view kPlanFile = "plan.ndrec";

class EmptyCampaignError : public Error {
 public:
  using Error::Error;
};

std::string CaseDir(const std::string& out_dir, const std::string& case_id);
// Completed case ids in name order.
std::vector<std::string> ListCases(const std::string& out_dir);

struct GenerateSummary {
  uint64_t planned = 0;
  uint64_t generated = 0;
  uint64_t skipped = 0;
  uint64_t failed = 0;
};

// Plans the campaign, then runs and persists every case. Case directories
// are written under a temporary name and renamed when complete, so an
// interrupted run leaves no partial case behind.
GenerateSummary CmdGenerate(const CampaignConfig& config, int jobs, bool resume,
                            std::ostream& log);

struct ValidateSummary {
  uint64_t cases = 0;
  uint64_t has_anomaly = 0;
  uint64_t no_anomaly = 0;
  uint64_t failed = 0;
};

// Writes verdict and pattern records into each case's meta file, plus
// summary.tsv, verdicts.tsv and exclusions.txt (configuration keys of
// NoAnomaly cases).
ValidateSummary CmdValidate(const CampaignConfig& config, int jobs, std::ostream& log);

EvalReport CmdEvaluate(const CampaignConfig& config, int jobs);

DatasetStats CmdStats(const CampaignConfig& config);

std::vector<std::vector<ScalabilityPoint>> CmdScalability(const CampaignConfig& config,
                                                          std::ostream& log);

struct AuditSummary {
  uint64_t cases = 0;
  uint64_t complete = 0;
};

AuditSummary CmdAudit(const CampaignConfig& config);

}  // namespace rcabench
