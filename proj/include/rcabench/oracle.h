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

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcabench/faultspace.h"
#include "rcabench/telemetry.h"

namespace rcabench {

struct OracleParams {
  double z_crit = 2.326;  // one-sided, alpha = 0.01
  int n_min = 30;
  double hard_latency_ms = 10000.0;
  double adaptive_multiplier = 3.0;
  double symptom_ratio = 2.0;
};

OracleParams ParseOracleParams(const nlohmann::json& doc);
nlohmann::json OracleParamsToJson(const OracleParams& params);

enum class Verdict { kHasAnomaly, kNoAnomaly };
std::string_view VerdictName(Verdict verdict);

inline constexpr std::string_view kSuccessRateDrop = "success-rate-drop";
inline constexpr std::string_view kHardLatency = "hard-latency";
inline constexpr std::string_view kAdaptiveLatency = "adaptive-latency";

struct ValidationVerdict {
  Verdict label = Verdict::kNoAnomaly;
  std::vector<std::string> triggered;
  double z = 0.0;
  double p95_normal_ms = 0.0;
  double p95_fault_ms = 0.0;
  uint64_t normal_total = 0;
  uint64_t normal_success = 0;
  uint64_t fault_total = 0;
  uint64_t fault_success = 0;
  bool insufficient_data = false;

  nlohmann::json ToJson() const;
  static ValidationVerdict FromJson(const nlohmann::json& doc);
};

// Pooled two-proportion statistic for a drop from x1/n1 to x2/n2; 0 when
// the pooled variance vanishes.
double TwoProportionZ(uint64_t x1, uint64_t n1, uint64_t x2, uint64_t n2);

// Root-span SLI checks between the normal and fault windows.
ValidationVerdict ValidateCase(const TelemetryBundle& bundle,
                               const OracleParams& params = {});

enum class PatternType { kTypeI, kTypeII, kTypeIII };
std::string_view PatternName(PatternType type);

struct PatternClass {
  PatternType type = PatternType::kTypeII;
  std::map<std::string, double> ratios;  // per service, may be +inf

  nlohmann::json ToJson() const;
};

// Metrics whose shift counts as a symptom for faults of `category`.
std::vector<std::string> SymptomMetrics(FaultCategory category);

// Fault-window over normal-window mean with 0/0 = 1 and x/0 = +inf.
double SymptomRatio(double fault_mean, double normal_mean);

// TypeII when no service is pronounced; TypeIII when a non-injected
// service's ratio strictly exceeds the injected one; TypeI otherwise.
PatternClass ClassifyRatios(const std::map<std::string, double>& ratios,
                            const std::string& injected, double threshold);

PatternClass ClassifyPattern(const TelemetryBundle& bundle,
                             const std::vector<std::string>& services,
                             const std::string& injected_service,
                             FaultCategory category,
                             const OracleParams& params = {});

struct AuditReport {
  std::vector<std::string> required;
  std::vector<std::string> missing;
  bool modality_complete = false;
  bool propagates = false;
  double latency_z = 0.0;

  bool complete() const { return modality_complete && propagates; }
  nlohmann::json ToJson() const;
};

std::vector<Modality> RequiredModalities(FaultCategory category);
std::string_view ModalityName(Modality modality);

AuditReport AuditObservability(const TelemetryBundle& bundle,
                               FaultCategory category,
                               const OracleParams& params = {});

}  // namespace rcabench
