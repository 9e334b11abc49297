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

#include "rcabench/groundtruth.h"

#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "rcabench/common.h"

namespace rcabench {

using nlohmann::json;

std::string_view GranularityName(Granularity g) {
  switch (g) {
    case Granularity::kService: return "service";
    case Granularity::kPod: return "pod";
    case Granularity::kContainer: return "container";
    case Granularity::kMetric: return "metric";
    case Granularity::kSpan: return "span";
    case Granularity::kFunction: return "function";
  }
  return "?";
}

Granularity ParseGranularity(std::string_view name) {
  for (Granularity g : {Granularity::kService, Granularity::kPod,
                        Granularity::kContainer, Granularity::kMetric,
                        Granularity::kSpan, Granularity::kFunction}) {
    if (GranularityName(g) == name) return g;
  }
  throw StorageError(fmt::format("unknown granularity '{}'", name));
}

namespace {

std::vector<LabelElement> PodPath(const ServiceGraph& graph, const std::string& pod_id) {
  const auto ref = graph.FindPod(pod_id);
  if (!ref) throw ConfigError(fmt::format("unknown pod '{}'", pod_id));
  return {{Granularity::kService, graph.services()[ref->service].name},
          {Granularity::kPod, pod_id}};
}

}  // namespace

GroundTruthLabel DeriveLabel(const FaultSpec& spec, const ServiceGraph& graph,
                             const LabelOptions& options) {
  GroundTruthLabel label;
  label.fault_type = spec.type;
  label.case_id = spec.case_id;
  const std::string& t = spec.type;
  if (t == "PodKill" || t == "PodFailure" || t == "TimeSkew") {
    label.path = PodPath(graph, spec.target);
  } else if (t == "CPUStress" || t == "MemoryStress") {
    label.path = PodPath(graph, spec.target);
    const auto ref = graph.FindPod(spec.target);
    const auto& pod = graph.services()[ref->service].pods[ref->pod];
    label.path.push_back({Granularity::kContainer, pod.containers.front()});
    label.path.push_back(
        {Granularity::kMetric, t == "CPUStress" ? "cpu_usage" : "memory_usage"});
  } else if (t == "ContainerKill") {
    const auto ref = graph.FindContainer(spec.target);
    if (!ref) throw ConfigError(fmt::format("unknown container '{}'", spec.target));
    const auto& svc = graph.services()[ref->service];
    label.path = {{Granularity::kService, svc.name},
                  {Granularity::kPod, svc.pods[ref->pod].id},
                  {Granularity::kContainer, spec.target}};
  } else if (spec.category == FaultCategory::kNetwork ||
             spec.category == FaultCategory::kHttp) {
    const CallEdge* edge = nullptr;
    for (const auto& e : graph.edges()) {
      if (e.Id() == spec.target) edge = &e;
    }
    if (edge == nullptr) throw ConfigError(fmt::format("unknown edge '{}'", spec.target));
    label.path = {{Granularity::kService,
                   options.caller_side_edges ? edge->caller : edge->callee}};
  } else if (spec.category == FaultCategory::kCode) {
    const auto colon = spec.target.rfind(':');
    const std::string service = spec.target.substr(0, colon);
    const auto& pod = graph.service(service).pods.front();
    label.path = {{Granularity::kService, service},
                  {Granularity::kPod, pod.id},
                  {Granularity::kContainer, pod.containers.front()},
                  {Granularity::kFunction, spec.target.substr(colon + 1)}};
  } else if (spec.category == FaultCategory::kDns) {
    graph.service(spec.target);
    label.path = {{Granularity::kService, spec.target}};
  } else {
    throw ConfigError(fmt::format("no label rule for '{}'", t));
  }
  return label;
}

std::set<LabelElement> ExpandAncestors(const GroundTruthLabel& label) {
  return {label.path.begin(), label.path.end()};
}

json LabelToJson(const GroundTruthLabel& label) {
  json path = json::array();
  for (const auto& e : label.path) {
    path.push_back({{"granularity", GranularityName(e.granularity)}, {"id", e.id}});
  }
  return {{"case_id", label.case_id}, {"fault_type", label.fault_type}, {"path", path}};
}

GroundTruthLabel LabelFromJson(const json& doc) {
  GroundTruthLabel label;
  label.case_id = doc.at("case_id").get<std::string>();
  label.fault_type = doc.at("fault_type").get<std::string>();
  for (const auto& e : doc.at("path")) {
    label.path.push_back({ParseGranularity(e.at("granularity").get<std::string>()),
                          e.at("id").get<std::string>()});
  }
  if (label.path.empty() || label.path.front().granularity != Granularity::kService) {
    throw StorageError("label path must start at a service");
  }
  return label;
}

void WriteLabel(const GroundTruthLabel& label, const std::string& case_dir) {
  const auto path = std::filesystem::path(case_dir) / kLabelFile;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError(fmt::format("cannot write '{}'", path.string()));
  out << LabelToJson(label).dump() << '\n';
}

GroundTruthLabel ReadLabel(const std::string& case_dir) {
  const auto path = std::filesystem::path(case_dir) / kLabelFile;
  std::ifstream in(path);
  if (!in) throw StorageError(fmt::format("cannot read '{}'", path.string()));
  std::string line;
  std::getline(in, line);
  try {
    return LabelFromJson(json::parse(line));
  } catch (const json::exception& e) {
    throw StorageError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace rcabench
