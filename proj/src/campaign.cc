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

#include "rcabench/campaign.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace rcabench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kConfigKeys = {
    "topology", "workload",  "protocol",   "fault_space", "oracle",
    "labels",   "algorithms", "algorithm_options", "evaluation",
    "scalability", "controls", "output", "seed"};

ScalabilityOptions ParseScalability(const json& doc, uint64_t seed) {
  ScalabilityOptions o;
  o.seed = seed;
  if (doc.is_null()) return o;
  if (doc.contains("volumes")) o.volumes = doc["volumes"].get<std::vector<uint64_t>>();
  o.runs = doc.value("runs", o.runs);
  o.cores = doc.value("cores", o.cores);
  o.window_s = doc.value("window_s", o.window_s);
  o.timeout_s = doc.value("timeout_s", o.timeout_s);
  if (o.volumes.empty() || o.runs < 1 || o.cores < 1 || o.window_s <= 0) {
    throw ConfigError("invalid scalability section");
  }
  return o;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::optional<FaultSpec> CaseFault(const std::vector<json>& meta) {
  if (meta.empty()) throw StorageError("empty meta file");
  const json& record = meta.front();
  if (!record.contains("fault") || record["fault"].is_null()) return std::nullopt;
  return FaultSpecFromJson(record["fault"]);
}

const json* FindRecord(const std::vector<json>& meta, const std::string& kind) {
  for (const auto& r : meta) {
    if (r.value("record", "") == kind) return &r;
  }
  return nullptr;
}

}  // namespace

FaultRegistry CampaignConfig::Registry() const {
  FaultRegistry registry = FaultRegistry::Default();
  registry.ApplyOverrides(registry_overrides);
  return registry;
}

AlgorithmConfig CampaignConfig::Algorithms() const {
  return ParseAlgorithmConfig(algorithm_options, DeriveSeed(seed, "algorithms"));
}

json CampaignConfig::ToJson() const {
  json strata = json::object();
  for (const auto& [k, v] : plan.strata) strata[k] = v;
  return {{"topology", TopologyToJson(topology)},
          {"workload", WorkloadProfileToJson(profile)},
          {"protocol", CaseProtocolToJson(protocol)},
          {"fault_space",
           {{"strata", strata},
            {"seed", plan.seed},
            {"exclusions", plan.exclusions},
            {"registry", registry_overrides}}},
          {"oracle", OracleParamsToJson(oracle)},
          {"labels", {{"caller_side_edges", labels.caller_side_edges}}},
          {"algorithms", algorithms},
          {"algorithm_options", algorithm_options},
          {"evaluation", {{"train_fraction", train_fraction}}},
          {"scalability",
           {{"volumes", scalability.volumes},
            {"runs", scalability.runs},
            {"cores", scalability.cores},
            {"window_s", scalability.window_s},
            {"timeout_s", scalability.timeout_s}}},
          {"controls", controls},
          {"output", out_dir},
          {"seed", seed}};
}

CampaignConfig ParseCampaignConfig(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("campaign config must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!kConfigKeys.contains(key)) {
      throw ConfigError(fmt::format("unknown campaign key '{}'", key));
    }
  }
  if (!doc.contains("topology")) throw ConfigError("campaign config needs a topology");
  CampaignConfig c;
  try {
    c.seed = doc.value("seed", uint64_t{1});
    c.topology = ResolveTopology(doc["topology"], base_dir);
    if (doc.contains("workload")) {
      const json& w = doc["workload"];
      if (w.is_string()) {
        if (w.get<std::string>() != "reference") {
          throw ConfigError(fmt::format("unknown workload '{}'", w.get<std::string>()));
        }
        c.profile = ReferenceProfile(60.0, c.seed);
      } else {
        c.profile = ParseWorkloadProfile(w);
      }
    }
    c.protocol = ParseCaseProtocol(doc.value("protocol", json()));
    const json fs_doc = doc.value("fault_space", json::object());
    c.plan = ParseFaultSpacePlan(fs_doc);
    if (!fs_doc.contains("seed")) c.plan.seed = DeriveSeed(c.seed, "plan");
    c.registry_overrides = fs_doc.value("registry", json());
    c.oracle = ParseOracleParams(doc.value("oracle", json()));
    c.labels.caller_side_edges =
        doc.value("labels", json::object()).value("caller_side_edges", false);
    if (doc.contains("algorithms")) {
      c.algorithms = doc["algorithms"].get<std::vector<std::string>>();
    }
    c.algorithm_options = doc.value("algorithm_options", json());
    c.train_fraction = doc.value("evaluation", json::object()).value("train_fraction", 0.8);
    c.scalability = ParseScalability(doc.value("scalability", json()), c.seed);
    c.controls = doc.value("controls", uint64_t{0});
    c.out_dir = doc.value("output", std::string("campaign"));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed campaign config: {}", e.what()));
  }
  c.profile.Validate(c.topology);
  c.Registry();
  const AlgorithmConfig algorithms = c.Algorithms();
  for (const auto& name : c.algorithms) MakeAlgorithm(name, algorithms);
  return c;
}

CampaignConfig LoadCampaignConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return ParseCampaignConfig(doc, fs::path(path).parent_path().string());
}

std::string CaseDir(const std::string& out_dir, const std::string& case_id) {
  return (fs::path(out_dir) / "cases" / case_id).string();
}

std::vector<std::string> ListCases(const std::string& out_dir) {
  std::vector<std::string> ids;
  const fs::path root = fs::path(out_dir) / "cases";
  if (!fs::is_directory(root)) return ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && !name.starts_with('.')) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

GenerateSummary CmdGenerate(const CampaignConfig& config, int jobs, bool resume,
                            std::ostream& log) {
  const fs::path out(config.out_dir);
  fs::create_directories(out / "cases");
  OpenOut(out / kCampaignFile) << config.ToJson().dump(2) << '\n';

  const FaultRegistry registry = config.Registry();
  std::vector<FaultSpec> specs = PlanCampaign(config.plan, config.topology.graph, registry);
  const CaseWindows w = config.protocol.Windows();
  {
    auto plan_out = OpenOut(out / kPlanFile);
    for (auto& spec : specs) {
      spec.window_start_s = w.fault_start_ms / 1000.0;
      spec.window_end_s = w.fault_end_ms / 1000.0;
      ValidateFaultSpec(spec, registry, config.topology.graph);
      plan_out << FaultSpecToJson(spec).dump() << '\n';
    }
  }
  struct Job {
    std::string case_id;
    std::optional<FaultSpec> fault;
  };
  std::vector<Job> work;
  for (const auto& spec : specs) work.push_back({spec.case_id, spec});
  for (uint64_t i = 0; i < config.controls; ++i) {
    work.push_back({fmt::format("control-{:04d}", i), std::nullopt});
  }

  GenerateSummary summary;
  summary.planned = work.size();
  std::mutex mutex;
  ParallelFor(work.size(), jobs, [&](std::size_t i) {
    const Job& job = work[i];
    const fs::path dir = CaseDir(config.out_dir, job.case_id);
    if (resume && fs::exists(dir / kMetaFile)) {
      std::lock_guard<std::mutex> lock(mutex);
      ++summary.skipped;
      return;
    }
    const fs::path tmp = out / "cases" / ("." + job.case_id + ".tmp");
    try {
      fs::remove_all(tmp);
      const CaseOutput result =
          RunCase(config.topology, config.profile, config.protocol, job.fault,
                  DeriveSeed(config.seed, job.case_id), job.case_id);
      PersistBundle(result.bundle, tmp.string(), result.meta.ToJson());
      if (job.fault) {
        WriteLabel(DeriveLabel(*job.fault, config.topology.graph, config.labels),
                   tmp.string());
      }
      fs::remove_all(dir);
      fs::rename(tmp, dir);
      std::lock_guard<std::mutex> lock(mutex);
      ++summary.generated;
    } catch (const std::exception& e) {
      std::error_code ec;
      fs::remove_all(tmp, ec);
      std::lock_guard<std::mutex> lock(mutex);
      ++summary.failed;
      log << fmt::format("case {} failed: {}\n", job.case_id, e.what());
    }
  });
  return summary;
}

ValidateSummary CmdValidate(const CampaignConfig& config, int jobs, std::ostream& log) {
  const auto ids = ListCases(config.out_dir);
  if (ids.empty()) throw EmptyCampaignError(fmt::format("no cases under '{}'", config.out_dir));
  std::vector<std::string> services = ServiceNames(config.topology);

  struct Row {
    std::string type = "none";
    std::string key;
    std::optional<ValidationVerdict> verdict;
    std::string pattern;
    std::string error;
  };
  std::vector<Row> rows(ids.size());
  ParallelFor(ids.size(), jobs, [&](std::size_t i) {
    Row& row = rows[i];
    const std::string dir = CaseDir(config.out_dir, ids[i]);
    try {
      const auto meta = ReadMetaRecords(dir);
      const auto fault = CaseFault(meta);
      const TelemetryBundle bundle = ReadBundle(dir);
      const ValidationVerdict verdict = ValidateCase(bundle, config.oracle);
      UpsertMetaRecord(dir, "verdict", verdict.ToJson());
      if (fault) {
        row.type = fault->type;
        row.key = fault->ConfigurationKey();
        const GroundTruthLabel label = ReadLabel(dir);
        const PatternClass pattern = ClassifyPattern(bundle, services, label.service(),
                                                     fault->category, config.oracle);
        UpsertMetaRecord(dir, "pattern", pattern.ToJson());
        row.pattern = PatternName(pattern.type);
      }
      row.verdict = verdict;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  ValidateSummary summary;
  summary.cases = ids.size();
  struct Counts {
    uint64_t has = 0, no = 0, insufficient = 0, failed = 0;
  };
  std::map<std::string, Counts> by_type;
  std::set<std::string> exclusions;
  const fs::path out(config.out_dir);
  auto verdicts = OpenOut(out / "verdicts.tsv");
  verdicts << "case_id\tfault_type\tlabel\ttriggered\tz\tp95_normal_ms\tp95_fault_ms\tpattern\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Row& row = rows[i];
    Counts& counts = by_type[row.type];
    if (!row.verdict) {
      ++counts.failed;
      ++summary.failed;
      log << fmt::format("case {} not validated: {}\n", ids[i], row.error);
      verdicts << fmt::format("{}\t{}\tMISSING\t\t\t\t\t\n", ids[i], row.type);
      continue;
    }
    const auto& v = *row.verdict;
    std::string triggered;
    for (const auto& t : v.triggered) triggered += (triggered.empty() ? "" : ",") + t;
    verdicts << fmt::format("{}\t{}\t{}\t{}\t{:.4f}\t{:.3f}\t{:.3f}\t{}\n", ids[i], row.type,
                            VerdictName(v.label), triggered, v.z, v.p95_normal_ms,
                            v.p95_fault_ms, row.pattern);
    if (v.label == Verdict::kHasAnomaly) {
      ++counts.has;
      ++summary.has_anomaly;
    } else {
      ++counts.no;
      ++summary.no_anomaly;
      if (!row.key.empty()) exclusions.insert(row.key);
    }
    if (v.insufficient_data) ++counts.insufficient;
  }
  auto table = OpenOut(out / "summary.tsv");
  table << "fault_type\tHasAnomaly\tNoAnomaly\tinsufficient\tmissing\n";
  for (const auto& [type, c] : by_type) {
    table << fmt::format("{}\t{}\t{}\t{}\t{}\n", type, c.has, c.no, c.insufficient, c.failed);
  }
  auto excl = OpenOut(out / "exclusions.txt");
  for (const auto& key : exclusions) excl << key << '\n';
  return summary;
}

EvalReport CmdEvaluate(const CampaignConfig& config, int jobs) {
  const auto ids = ListCases(config.out_dir);
  if (ids.empty()) throw EmptyCampaignError(fmt::format("no cases under '{}'", config.out_dir));
  std::vector<EvalCase> cases;
  for (const auto& id : ids) {
    const std::string dir = CaseDir(config.out_dir, id);
    const auto meta = ReadMetaRecords(dir);
    const json* verdict = FindRecord(meta, "verdict");
    if (verdict == nullptr) {
      throw StorageError(fmt::format("case {} has no verdict; run validate first", id));
    }
    const auto fault = CaseFault(meta);
    if (!fault || verdict->at("label") != "HasAnomaly") continue;
    const GroundTruthLabel label = ReadLabel(dir);
    cases.push_back({id, dir, fault->type, label.service()});
  }
  if (cases.empty()) throw EmptyEvaluationError("no HasAnomaly cases to evaluate");
  EvalOptions options;
  options.train_fraction = config.train_fraction;
  options.seed = DeriveSeed(config.seed, "split");
  options.jobs = jobs;
  EvalReport report = RunEvaluation(cases, config.topology, config.algorithms,
                                    config.Algorithms(), options);
  WriteEvalReport(report, config.out_dir);
  return report;
}

DatasetStats CmdStats(const CampaignConfig& config) {
  const auto ids = ListCases(config.out_dir);
  if (ids.empty()) throw EmptyCampaignError(fmt::format("no cases under '{}'", config.out_dir));
  DatasetStatsBuilder builder(ServiceNames(config.topology));
  for (const auto& id : ids) {
    const std::string dir = CaseDir(config.out_dir, id);
    const auto fault = CaseFault(ReadMetaRecords(dir));
    builder.Add(ReadBundle(dir), fault ? fault->type : "");
  }
  const DatasetStats stats = builder.Finish();
  WriteDatasetStats(stats, (fs::path(config.out_dir) / "stats.tsv").string());
  return stats;
}

std::vector<std::vector<ScalabilityPoint>> CmdScalability(const CampaignConfig& config,
                                                          std::ostream& log) {
  fs::create_directories(config.out_dir);
  const AlgorithmConfig algorithms = config.Algorithms();
  std::vector<std::vector<ScalabilityPoint>> curves;
  for (const auto& name : config.algorithms) {
    int granted = 0;
    auto points = ScalabilityRun([&] { return MakeAlgorithm(name, algorithms); },
                                 config.topology, config.scalability, &granted);
    log << fmt::format("{}: ran on {} of {} requested cores\n", name, granted,
                       config.scalability.cores);
    WriteScalability(points,
                     (fs::path(config.out_dir) / fmt::format("scalability_{}.tsv", name)).string());
    curves.push_back(std::move(points));
  }
  return curves;
}

AuditSummary CmdAudit(const CampaignConfig& config) {
  const auto ids = ListCases(config.out_dir);
  if (ids.empty()) throw EmptyCampaignError(fmt::format("no cases under '{}'", config.out_dir));
  AuditSummary summary;
  auto out = OpenOut(fs::path(config.out_dir) / "audit.tsv");
  out << "case_id\tfault_type\trequired\tmissing\tpropagates\tcomplete\n";
  for (const auto& id : ids) {
    const std::string dir = CaseDir(config.out_dir, id);
    const auto fault = CaseFault(ReadMetaRecords(dir));
    if (!fault) continue;
    const AuditReport report = AuditObservability(ReadBundle(dir), fault->category,
                                                  config.oracle);
    auto join = [](const std::vector<std::string>& items) {
      std::string s;
      for (const auto& x : items) s += (s.empty() ? "" : ",") + x;
      return s;
    };
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", id, fault->type, join(report.required),
                       join(report.missing), report.propagates ? 1 : 0,
                       report.complete() ? 1 : 0);
    ++summary.cases;
    summary.complete += report.complete() ? 1 : 0;
  }
  return summary;
}

}  // namespace rcabench
