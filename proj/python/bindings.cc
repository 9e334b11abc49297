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

// Python bindings. Structured values cross the boundary as JSON text; the
// rcabench package wraps these entry points with dict conversions.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcabench/campaign.h"

namespace py = pybind11;
using nlohmann::json;

namespace rcabench {
namespace {

json Parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

Topology TopologyArg(const std::string& ref) { return ResolveTopology(Parse(ref), ""); }

std::vector<uint64_t> RankArg(const std::vector<std::optional<uint64_t>>& ranks) {
  std::vector<uint64_t> out;
  out.reserve(ranks.size());
  for (const auto& r : ranks) out.push_back(r ? *r : kAbsentRank);
  return out;
}

std::string RunCaseJson(const std::string& topology_ref, const std::string& fault,
                        uint64_t seed, const std::string& protocol,
                        const std::string& workload, const std::string& out_dir) {
  const Topology topology = TopologyArg(topology_ref);
  const CaseProtocol p = ParseCaseProtocol(Parse(protocol));
  json fault_doc = Parse(fault);
  std::optional<FaultSpec> spec;
  if (!fault_doc.is_null()) {
    // The protocol decides the fault window.
    const CaseWindows w = p.Windows();
    fault_doc["window"] = {w.fault_start_ms / 1000.0, w.fault_end_ms / 1000.0};
    if (!fault_doc.contains("params")) fault_doc["params"] = json::object();
    spec = FaultSpecFromJson(fault_doc);
    ValidateFaultSpec(*spec, FaultRegistry::Default(), topology.graph);
  }
  const json w = Parse(workload);
  const WorkloadProfile profile =
      w.is_string() && w == "reference" ? ReferenceProfile(p.TotalSeconds(), seed)
                                        : ParseWorkloadProfile(w);
  CaseOutput out;
  {
    py::gil_scoped_release release;
    out = RunCase(topology, profile, p, spec, seed);
    if (!out_dir.empty()) {
      PersistBundle(out.bundle, out_dir, out.meta.ToJson());
      if (spec) WriteLabel(DeriveLabel(*spec, topology.graph), out_dir);
    }
  }
  json summary = out.meta.ToJson();
  summary["spans"] = out.bundle.spans.size();
  summary["logs"] = out.bundle.logs.size();
  summary["metrics"] = out.bundle.metrics.size();
  summary["verdict"] = ValidateCase(out.bundle).ToJson();
  return summary.dump();
}

std::string ValidateJson(const std::string& case_dir, const std::string& oracle) {
  const OracleParams params = ParseOracleParams(Parse(oracle));
  py::gil_scoped_release release;
  return ValidateCase(ReadBundle(case_dir), params).ToJson().dump();
}

std::vector<std::pair<std::string, double>> SimpleRcaDir(const std::string& case_dir,
                                                         const std::string& topology_ref) {
  const Topology topology = TopologyArg(topology_ref);
  py::gil_scoped_release release;
  return SimpleRca(ReadBundle(case_dir), topology).ranking;
}

CampaignConfig ConfigArg(const std::string& config, const std::string& base_dir) {
  return ParseCampaignConfig(Parse(config), base_dir);
}

std::string GenerateJson(const std::string& config, const std::string& base_dir, int jobs,
                         bool resume) {
  const auto c = ConfigArg(config, base_dir);
  std::ostringstream log;
  GenerateSummary s;
  {
    py::gil_scoped_release release;
    s = CmdGenerate(c, jobs, resume, log);
  }
  return json{{"planned", s.planned},
              {"generated", s.generated},
              {"skipped", s.skipped},
              {"failed", s.failed},
              {"log", log.str()}}
      .dump();
}

std::string ValidateCampaignJson(const std::string& config, const std::string& base_dir,
                                 int jobs) {
  const auto c = ConfigArg(config, base_dir);
  std::ostringstream log;
  ValidateSummary s;
  {
    py::gil_scoped_release release;
    s = CmdValidate(c, jobs, log);
  }
  return json{{"cases", s.cases},
              {"has_anomaly", s.has_anomaly},
              {"no_anomaly", s.no_anomaly},
              {"failed", s.failed}}
      .dump();
}

json RowJson(const MetricRow& r) {
  return {{"algorithm", r.algorithm}, {"fault_type", r.fault_type}, {"cases", r.cases},
          {"flagged", r.flagged},     {"top1", r.top1},             {"top3", r.top3},
          {"top5", r.top5},           {"avg3", r.avg3},             {"avg5", r.avg5},
          {"mrr", r.mrr},             {"mean_seconds", r.mean_seconds}};
}

std::string EvaluateJson(const std::string& config, const std::string& base_dir, int jobs) {
  const auto c = ConfigArg(config, base_dir);
  EvalReport report;
  {
    py::gil_scoped_release release;
    report = CmdEvaluate(c, jobs);
  }
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(RowJson(r));
  json breakdown = json::array();
  for (const auto& r : report.breakdown) breakdown.push_back(RowJson(r));
  return json{{"rows", rows}, {"breakdown", breakdown}}.dump();
}

std::string StatsJson(const std::string& config, const std::string& base_dir) {
  const auto c = ConfigArg(config, base_dir);
  DatasetStats s;
  {
    py::gil_scoped_release release;
    s = CmdStats(c);
  }
  return json{{"cases", s.cases},       {"services", s.services}, {"coverage", s.coverage},
              {"qps_mean", s.qps_mean}, {"qps_max", s.qps_max},   {"max_depth", s.max_depth},
              {"traces", s.traces},     {"spans", s.spans},       {"logs", s.logs},
              {"metrics", s.metrics},   {"fault_types", s.fault_types}}
      .dump();
}

}  // namespace
}  // namespace rcabench

PYBIND11_MODULE(_core, m) {
  using namespace rcabench;
  m.doc() = "Native core of the rcabench microservice RCA benchmark.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<StorageError>(m, "StorageError", base.ptr());
  py::register_exception<EmptyInputError>(m, "EmptyInputError", base.ptr());

  m.def("reference_topology",
        [](const std::string& name) { return TopologyToJson(ReferenceTopology(name)).dump(); },
        py::arg("name"));
  m.def("count_paths",
        [](const std::string& topology, const std::string& workflow) {
          const Topology t = TopologyArg(topology);
          return CountPaths(t, t.workflow(workflow));
        },
        py::arg("topology"), py::arg("workflow"));
  m.def("space_cardinality",
        [](const std::string& topology) {
          const auto c = ComputeSpaceCardinality(TopologyArg(topology).graph,
                                                 FaultRegistry::Default());
          json per_type = json::object();
          for (const auto& [name, n] : c.per_type) per_type[name] = n.str();
          return json{{"total", c.total.str()}, {"per_type", per_type}}.dump();
        },
        py::arg("topology"));
  m.def("plan_campaign",
        [](const std::string& topology, const std::string& plan) {
          const Topology t = TopologyArg(topology);
          json out = json::array();
          for (const auto& s :
               PlanCampaign(ParseFaultSpacePlan(Parse(plan)), t.graph, FaultRegistry::Default())) {
            out.push_back(FaultSpecToJson(s));
          }
          return out.dump();
        },
        py::arg("topology"), py::arg("plan"));
  m.def("two_proportion_z", &TwoProportionZ, py::arg("x1"), py::arg("n1"), py::arg("x2"),
        py::arg("n2"));
  m.def("top_k", [](const std::vector<std::optional<uint64_t>>& r, uint64_t k) {
    return TopK(RankArg(r), k);
  }, py::arg("ranks"), py::arg("k"));
  m.def("avg_k", [](const std::vector<std::optional<uint64_t>>& r, uint64_t k) {
    return AvgK(RankArg(r), k);
  }, py::arg("ranks"), py::arg("k"));
  m.def("mrr", [](const std::vector<std::optional<uint64_t>>& r) { return Mrr(RankArg(r)); },
        py::arg("ranks"));
  m.def("run_case", &RunCaseJson, py::arg("topology"), py::arg("fault"), py::arg("seed"),
        py::arg("protocol"), py::arg("workload"), py::arg("out_dir"));
  m.def("validate_case", &ValidateJson, py::arg("case_dir"), py::arg("oracle"));
  m.def("simple_rca", &SimpleRcaDir, py::arg("case_dir"), py::arg("topology"));
  m.def("generate", &GenerateJson, py::arg("config"), py::arg("base_dir"), py::arg("jobs"),
        py::arg("resume"));
  m.def("validate", &ValidateCampaignJson, py::arg("config"), py::arg("base_dir"),
        py::arg("jobs"));
  m.def("evaluate", &EvaluateJson, py::arg("config"), py::arg("base_dir"), py::arg("jobs"));
  m.def("stats", &StatsJson, py::arg("config"), py::arg("base_dir"));
}
