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

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcabench/faultspace.h"
#include "rcabench/topology.h"

namespace rcabench {

enum class Granularity { kService, kPod, kContainer, kMetric, kSpan, kFunction };

std::string_view GranularityName(Granularity granularity);
Granularity ParseGranularity(std::string_view name);

struct LabelElement {
  Granularity granularity;
  std::string id;

  auto operator<=>(const LabelElement&) const = default;
};

// Root-first path; the service element is always present.
struct GroundTruthLabel {
  std::vector<LabelElement> path;
  std::string fault_type;
  std::string case_id;

  const std::string& service() const { return path.front().id; }
  bool operator==(const GroundTruthLabel&) const = default;
};

struct LabelOptions {
  // Attribute edge faults to the caller instead of the callee.
  bool caller_side_edges = false;
};

GroundTruthLabel DeriveLabel(const FaultSpec& spec, const ServiceGraph& graph,
                             const LabelOptions& options = {});

std::set<LabelElement> ExpandAncestors(const GroundTruthLabel& label);

nlohmann::json LabelToJson(const GroundTruthLabel& label);
GroundTruthLabel LabelFromJson(const nlohmann::json& doc);

inline constexpr std::string_view kLabelFile = "label.rec";

void WriteLabel(const GroundTruthLabel& label, const std::string& case_dir);
GroundTruthLabel ReadLabel(const std::string& case_dir);

}  // namespace rcabench
