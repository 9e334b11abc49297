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

#include "rcabench/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace rcabench {

using nlohmann::json;

OracleParams ParseOracleParams(const json& doc) {
  OracleParams p;
  if (doc.is_null()) return p;
  if (!doc.is_object()) throw ConfigError("oracle section must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "z_crit") p.z_crit = value.get<double>();
    else if (key == "n_min") p.n_min = value.get<int>();
    else if (key == "hard_latency_ms") p.hard_latency_ms = value.get<double>();
    else if (key == "adaptive_multiplier") p.adaptive_multiplier = value.get<double>();
    else if (key == "symptom_ratio") p.symptom_ratio = value.get<double>();
    else throw ConfigError(fmt::format("unknown oracle key '{}'", key));
  }
  if (p.n_min < 1 || p.adaptive_multiplier <= 0 || p.symptom_ratio <= 0) {
    throw ConfigError("invalid oracle parameters");
  }
  return p;
}

json OracleParamsToJson(const OracleParams& p) {
  return {{"z_crit", p.z_crit},
          {"n_min", p.n_min},
          {"hard_latency_ms", p.hard_latency_ms},
          {"adaptive_multiplier", p.adaptive_multiplier},
          {"symptom_ratio", p.symptom_ratio}};
}

std::string_view VerdictName(Verdict verdict) {
  return verdict == Verdict::kHasAnomaly ? "HasAnomaly" : "NoAnomaly";
}

json ValidationVerdict::ToJson() const {
  return {{"label", VerdictName(label)},
          {"triggered", triggered},
          {"z", z},
          {"p95_normal_ms", p95_normal_ms},
          {"p95_fault_ms", p95_fault_ms},
          {"normal", {normal_success, normal_total}},
          {"fault", {fault_success, fault_total}},
          {"insufficient_data", insufficient_data}};
}

ValidationVerdict ValidationVerdict::FromJson(const json& doc) {
  ValidationVerdict v;
  v.label = doc.at("label").get<std::string>() == "HasAnomaly" ? Verdict::kHasAnomaly
                                                               : Verdict::kNoAnomaly;
  v.triggered = doc.at("triggered").get<std::vector<std::string>>();
  v.z = doc.at("z").get<double>();
  v.p95_normal_ms = doc.at("p95_normal_ms").get<double>();
  v.p95_fault_ms = doc.at("p95_fault_ms").get<double>();
  v.normal_success = doc.at("normal")[0].get<uint64_t>();
  v.normal_total = doc.at("normal")[1].get<uint64_t>();
  v.fault_success = doc.at("fault")[0].get<uint64_t>();
  v.fault_total = doc.at("fault")[1].get<uint64_t>();
  v.insufficient_data = doc.value("insufficient_data", false);
  return v;
}

double TwoProportionZ(uint64_t x1, uint64_t n1, uint64_t x2, uint64_t n2) {
  if (n1 == 0 || n2 == 0) return 0.0;
  const double p1 = static_cast<double>(x1) / n1;
  const double p2 = static_cast<double>(x2) / n2;
  const double pooled = static_cast<double>(x1 + x2) / (n1 + n2);
  const double var = pooled * (1 - pooled) * (1.0 / n1 + 1.0 / n2);
  if (var <= 0) return 0.0;
  return (p1 - p2) / std::sqrt(var);
}

namespace {

struct RootSample {
  std::vector<double> latencies;
  uint64_t success = 0;
};

RootSample RootsIn(const TelemetryBundle& bundle, TimeWindow window) {
  RootSample out;
  for (const auto& span : bundle.spans) {
    if (!span.IsRoot() || !window.Contains(span.start_ms)) continue;
    out.latencies.push_back(span.DurationMs());
    if (span.status == SpanStatus::kOk) ++out.success;
  }
  return out;
}

}  // namespace

ValidationVerdict ValidateCase(const TelemetryBundle& bundle,
                               const OracleParams& params) {
  const auto& w = bundle.windows;
  if (!(w.normal_start_ms <= w.fault_start_ms && w.fault_start_ms <= w.fault_end_ms)) {
    throw StorageError("malformed bundle: windows out of order");
  }
  const RootSample normal = RootsIn(bundle, NormalWindow(w));
  const RootSample fault = RootsIn(bundle, FaultWindow(w));
  ValidationVerdict v;
  v.normal_total = normal.latencies.size();
  v.normal_success = normal.success;
  v.fault_total = fault.latencies.size();
  v.fault_success = fault.success;
  if (v.normal_total < static_cast<uint64_t>(params.n_min) ||
      v.fault_total < static_cast<uint64_t>(params.n_min)) {
    v.insufficient_data = true;
    return v;
  }
  v.z = TwoProportionZ(v.normal_success, v.normal_total, v.fault_success, v.fault_total);
  v.p95_normal_ms = Percentile(normal.latencies, 0.95);
  v.p95_fault_ms = Percentile(fault.latencies, 0.95);
  if (v.z > params.z_crit) v.triggered.emplace_back(kSuccessRateDrop);
  if (v.p95_fault_ms > params.hard_latency_ms) v.triggered.emplace_back(kHardLatency);
  if (v.p95_fault_ms > params.adaptive_multiplier * v.p95_normal_ms) {
    v.triggered.emplace_back(kAdaptiveLatency);
  }
  v.label = v.triggered.empty() ? Verdict::kNoAnomaly : Verdict::kHasAnomaly;
  return v;
}

std::string_view PatternName(PatternType type) {
  switch (type) {
    case PatternType::kTypeI: return "TypeI";
    case PatternType::kTypeII: return "TypeII";
    case PatternType::kTypeIII: return "TypeIII";
  }
  return "?";
}

json PatternClass::ToJson() const {
  json r = json::object();
  for (const auto& [service, ratio] : ratios) {
    // JSON has no infinity.
    r[service] = std::isinf(ratio) ? json("inf") : json(ratio);
  }
  return {{"class", PatternName(type)}, {"ratios", r}};
}

std::vector<std::string> SymptomMetrics(FaultCategory category) {
  switch (category) {
    case FaultCategory::kResource:
      return {"cpu_usage", "memory_usage", "restarts"};
    case FaultCategory::kNetwork:
      return {"rpc_latency_mean", "error_count", "net_in", "net_out"};
    case FaultCategory::kHttp:
      return {"rpc_latency_mean", "error_count"};
    case FaultCategory::kCode:
      return {"rpc_latency_mean", "error_count", "gc_pause", "cpu_usage"};
    case FaultCategory::kDns:
      return {"error_count"};
    case FaultCategory::kTime:
      return {};
  }
  return {};
}

double SymptomRatio(double fault_mean, double normal_mean) {
  if (normal_mean == 0.0) {
    return fault_mean == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return fault_mean / normal_mean;
}

PatternClass ClassifyRatios(const std::map<std::string, double>& ratios,
                            const std::string& injected, double threshold) {
  PatternClass out;
  out.ratios = ratios;
  bool any = false;
  for (const auto& [service, ratio] : ratios) any = any || ratio >= threshold;
  if (!any) {
    out.type = PatternType::kTypeII;
    return out;
  }
  auto it = ratios.find(injected);
  const double own = it == ratios.end() ? 0.0 : it->second;
  out.type = PatternType::kTypeI;
  for (const auto& [service, ratio] : ratios) {
    if (service != injected && ratio > own) out.type = PatternType::kTypeIII;
  }
  return out;
}

PatternClass ClassifyPattern(const TelemetryBundle& bundle,
                             const std::vector<std::string>& services,
                             const std::string& injected_service,
                             FaultCategory category, const OracleParams& params) {
  const auto& w = bundle.windows;
  const TimeWindow normal = NormalWindow(w);
  const TimeWindow fault = FaultWindow(w);
  const auto metrics = SymptomMetrics(category);
  // (service, metric) -> sums and counts per window.
  struct Acc {
    double sum[2] = {0, 0};
    uint64_t n[2] = {0, 0};
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& m : bundle.metrics) {
    if (std::find(metrics.begin(), metrics.end(), m.metric) == metrics.end()) continue;
    int slot = normal.Contains(m.timestamp_ms) ? 0 : fault.Contains(m.timestamp_ms) ? 1 : -1;
    if (slot < 0) continue;
    auto& a = acc[{m.service, m.metric}];
    a.sum[slot] += m.value;
    a.n[slot] += 1;
  }
  std::map<std::string, double> errors[2];
  for (const auto& log : bundle.logs) {
    if (log.severity != Severity::kError) continue;
    if (normal.Contains(log.timestamp_ms)) errors[0][log.service] += 1;
    else if (fault.Contains(log.timestamp_ms)) errors[1][log.service] += 1;
  }
  const double normal_len = std::max<int64_t>(1, normal.end_ms - normal.start_ms);
  const double fault_len = std::max<int64_t>(1, fault.end_ms - fault.start_ms);

  std::map<std::string, double> ratios;
  for (const auto& service : services) {
    double best = SymptomRatio(errors[1][service] / fault_len,
                               errors[0][service] / normal_len);
    for (const auto& metric : metrics) {
      auto it = acc.find({service, metric});
      if (it == acc.end()) continue;
      const Acc& a = it->second;
      const double nm = a.n[0] ? a.sum[0] / a.n[0] : 0.0;
      const double fm = a.n[1] ? a.sum[1] / a.n[1] : 0.0;
      best = std::max(best, SymptomRatio(fm, nm));
    }
    ratios[service] = best;
  }
  return ClassifyRatios(ratios, injected_service, params.symptom_ratio);
}

json AuditReport::ToJson() const {
  return {{"required", required},
          {"missing", missing},
          {"modality_complete", modality_complete},
          {"propagates", propagates},
          {"latency_z", latency_z},
          {"complete", complete()}};
}

std::vector<Modality> RequiredModalities(FaultCategory category) {
  switch (category) {
    case FaultCategory::kNetwork:
    case FaultCategory::kHttp:
    case FaultCategory::kDns:
      return {Modality::kTraces};
    case FaultCategory::kResource:
      return {Modality::kMetrics};
    case FaultCategory::kCode:
      return {Modality::kLogs, Modality::kTraces};
    case FaultCategory::kTime:
      return {Modality::kMetrics, Modality::kLogs, Modality::kTraces};
  }
  return {};
}

std::string_view ModalityName(Modality modality) {
  switch (modality) {
    case Modality::kMetrics: return "metrics";
    case Modality::kLogs: return "logs";
    case Modality::kTraces: return "traces";
  }
  return "?";
}

AuditReport AuditObservability(const TelemetryBundle& bundle,
                               FaultCategory category, const OracleParams& params) {
  AuditReport report;
  const TimeWindow fault = FaultWindow(bundle.windows);
  for (Modality m : RequiredModalities(category)) {
    report.required.emplace_back(ModalityName(m));
    if (QueryWindow(bundle, fault, m).size() == 0) {
      report.missing.emplace_back(ModalityName(m));
    }
  }
  report.modality_complete = report.missing.empty();

  const ValidationVerdict verdict = ValidateCase(bundle, params);
  const RootSample normal = RootsIn(bundle, NormalWindow(bundle.windows));
  const RootSample faulty = RootsIn(bundle, fault);
  if (normal.latencies.size() >= 2 && faulty.latencies.size() >= 2) {
    const double mn = Mean(normal.latencies);
    const double mf = Mean(faulty.latencies);
    const double sn = StdDev(normal.latencies);
    const double sf = StdDev(faulty.latencies);
    const double se = std::sqrt(sn * sn / normal.latencies.size() +
                                sf * sf / faulty.latencies.size());
    report.latency_z = se > 0 ? (mf - mn) / se : 0.0;
  }
  report.propagates = verdict.label == Verdict::kHasAnomaly ||
                      report.latency_z > params.z_crit;
  return report;
}

}  // namespace rcabench
