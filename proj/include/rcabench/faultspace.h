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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "rcabench/common.h"
#include "rcabench/topology.h"

namespace rcabench {

using BigCount = boost::multiprecision::cpp_int;

enum class FaultCategory { kResource, kNetwork, kHttp, kCode, kDns, kTime };

inline constexpr FaultCategory kAllCategories[] = {
    FaultCategory::kResource, FaultCategory::kNetwork, FaultCategory::kHttp,
    FaultCategory::kCode,     FaultCategory::kDns,     FaultCategory::kTime};

std::string_view CategoryName(FaultCategory category);
std::optional<FaultCategory> ParseCategory(std::string_view name);

enum class TargetKind { kService, kPod, kContainer, kEdge, kOperation };

std::string_view TargetKindName(TargetKind kind);

using ParamValue = std::variant<double, std::string>;

std::string FormatParam(const ParamValue& value);
nlohmann::json ParamToJson(const ParamValue& value);

struct ParamGrid {
  std::string name;
  std::vector<ParamValue> values;
};

// Which topology elements a fault type can be injected into.
enum class TargetDomain {
  kCallingService,     // monitored services with outbound calls
  kPod,                // pods of monitored services
  kContainer,          // containers of monitored services
  kEdge,               // edges with a monitored caller
  kHttpEdge,           // non-database edges
  kOperation,          // (monitored service, handled operation)
  kDatabaseOperation,  // operations that issue database calls
};

struct FaultType {
  FaultCategory category;
  std::string name;
  TargetKind target_kind;
  TargetDomain domain;
  std::vector<ParamGrid> params;
};

class FaultRegistry {
 public:
  // The 31 shipped fault types with their default discretized grids.
  static FaultRegistry Default();

  const std::vector<FaultType>& types() const { return types_; }
  const FaultType* Find(std::string_view name) const;
  const FaultType& Get(std::string_view name) const;

  // Replaces grids: {"NetworkDelay": {"latency_ms": [10, 20]}}. A grid may
  // also be given as {"start": a, "stop": b, "step": s} (inclusive).
  void ApplyOverrides(const nlohmann::json& overrides);

 private:
  std::vector<FaultType> types_;
};

// Valid injection targets of a type, in deterministic order.
std::vector<std::string> EnumerateTargets(const FaultType& type,
                                          const ServiceGraph& graph);

struct FaultSpec {
  std::string case_id;
  std::string type;
  FaultCategory category = FaultCategory::kResource;
  std::string target;
  // Parameter name -> value, one per schema entry.
  std::map<std::string, ParamValue> params;
  // Injection window in case seconds, [start, end).
  double window_start_s = 0.0;
  double window_end_s = 0.0;

  double Number(const std::string& param) const;
  std::string Text(const std::string& param) const;
  // Type, target and parameter assignment; identifies a configuration.
  std::string ConfigurationKey() const;

  bool operator==(const FaultSpec&) const = default;
};

nlohmann::json FaultSpecToJson(const FaultSpec& spec);
FaultSpec FaultSpecFromJson(const nlohmann::json& doc);

// Checks the parameter assignment against the schema and the target against
// the topology. Throws ConfigError.
void ValidateFaultSpec(const FaultSpec& spec, const FaultRegistry& registry,
                       const ServiceGraph& graph);

struct SpaceCardinality {
  std::map<std::string, BigCount> per_type;
  std::map<FaultCategory, BigCount> per_category;
  BigCount total;
};

SpaceCardinality ComputeSpaceCardinality(const ServiceGraph& graph,
                                         const FaultRegistry& registry);

class StratumExhaustedError : public Error {
 public:
  using Error::Error;
};

struct FaultSpacePlan {
  // Stratum -> number of specs. A stratum is a category name ("Network") or
  // a single fault type name ("HTTPRequestAbort").
  std::map<std::string, uint64_t> strata;
  uint64_t seed = 1;
  // Configuration keys already run.
  std::set<std::string> exclusions;
  double window_start_s = 480.0;
  double window_end_s = 720.0;
};

FaultSpacePlan ParseFaultSpacePlan(const nlohmann::json& doc);

// Uniform sampling without replacement inside each stratum. Case ids are
// "<index>-<type>" in plan order.
std::vector<FaultSpec> PlanCampaign(const FaultSpacePlan& plan,
                                    const ServiceGraph& graph,
                                    const FaultRegistry& registry);

// Decodes configuration `index` of a stratum (types in registry order,
// then targets, then parameters with the last one varying fastest).
FaultSpec DecodeConfiguration(const std::vector<const FaultType*>& stratum,
                              const ServiceGraph& graph, const BigCount& index);

}  // namespace rcabench
