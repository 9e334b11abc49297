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

#include "rcabench/rca.h"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

namespace rcabench {

using nlohmann::json;

std::size_t RankedCandidates::RankOf(const std::string& service) const {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].first == service) return i + 1;
  }
  return 0;
}

RankedCandidates MakeRanking(std::vector<std::pair<std::string, double>> scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  RankedCandidates out;
  std::set<std::string> seen;
  for (auto& entry : scores) {
    if (seen.insert(entry.first).second) out.ranking.push_back(std::move(entry));
  }
  return out;
}

SimpleRcaOptions ParseSimpleRcaOptions(const json& doc) {
  SimpleRcaOptions o;
  if (doc.is_null()) return o;
  for (const auto& [key, value] : doc.items()) {
    if (key == "metric_weight") o.metric_weight = value.get<double>();
    else if (key == "trace_weight") o.trace_weight = value.get<double>();
    else if (key == "log_weight") o.log_weight = value.get<double>();
    else if (key == "trace_multiplier") o.trace_multiplier = value.get<double>();
    else if (key == "binary_trace_alerts") o.binary_trace_alerts = value.get<bool>();
    else if (key == "log_keywords") o.log_keywords = value.get<std::vector<std::string>>();
    else if (key == "log_floor") o.log_floor = value.get<double>();
    else if (key == "log_multiplier") o.log_multiplier = value.get<double>();
    else throw ConfigError(fmt::format("unknown simple_rca option '{}'", key));
  }
  return o;
}

std::map<std::string, double> MetricAlerts(const TelemetryBundle& bundle) {
  const TimeWindow normal = NormalWindow(bundle.windows);
  const TimeWindow fault = FaultWindow(bundle.windows);
  std::map<std::pair<std::string, std::string>, std::vector<double>> before, after;
  for (const auto& m : bundle.metrics) {
    if (normal.Contains(m.timestamp_ms)) before[{m.service, m.metric}].push_back(m.value);
    else if (fault.Contains(m.timestamp_ms)) after[{m.service, m.metric}].push_back(m.value);
  }
  std::map<std::string, double> alerts;
  for (const auto& [key, values] : before) {
    const SeriesStats s = ComputeSeriesStats(values);
    const double threshold = std::max(s.mean + 3 * s.std, s.p95);
    auto it = after.find(key);
    if (it == after.end()) continue;
    double count = 0;
    for (double v : it->second) count += v > threshold ? 1 : 0;
    if (count > 0) alerts[key.first] += count;
  }
  return alerts;
}

std::map<std::string, double> TraceAlerts(const TelemetryBundle& bundle,
                                          const SimpleRcaOptions& options) {
  const TimeWindow normal = NormalWindow(bundle.windows);
  const TimeWindow fault = FaultWindow(bundle.windows);
  std::map<std::string, std::vector<double>> before, after;
  for (const auto& s : bundle.spans) {
    if (normal.Contains(s.start_ms)) before[s.service].push_back(s.DurationMs());
    else if (fault.Contains(s.start_ms)) after[s.service].push_back(s.DurationMs());
  }
  std::map<std::string, double> alerts;
  for (const auto& [service, values] : before) {
    auto it = after.find(service);
    if (it == after.end()) continue;
    const double p95_normal = Percentile(values, 0.95);
    const double p95_fault = Percentile(it->second, 0.95);
    if (!(p95_fault > options.trace_multiplier * p95_normal)) continue;
    if (options.binary_trace_alerts) {
      alerts[service] = 1;
      continue;
    }
    double count = 0;
    for (double v : it->second) count += v > p95_normal ? 1 : 0;
    alerts[service] = count;
  }
  return alerts;
}

namespace {

std::string Upper(std::string text) {
  for (char& c : text) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return text;
}

}  // namespace

std::map<std::string, double> LogAlerts(const TelemetryBundle& bundle,
                                        const SimpleRcaOptions& options) {
  const TimeWindow normal = NormalWindow(bundle.windows);
  const TimeWindow fault = FaultWindow(bundle.windows);
  std::vector<std::string> keywords;
  for (const auto& k : options.log_keywords) keywords.push_back(Upper(k));
  std::map<std::string, double> before, after;
  for (const auto& log : bundle.logs) {
    const bool in_normal = normal.Contains(log.timestamp_ms);
    if (!in_normal && !fault.Contains(log.timestamp_ms)) continue;
    bool hit = log.severity == Severity::kError;
    if (!hit) {
      const std::string text = Upper(log.message);
      for (const auto& k : keywords) {
        if (text.find(k) != std::string::npos) {
          hit = true;
          break;
        }
      }
    }
    if (hit) (in_normal ? before : after)[log.service] += 1;
  }
  std::map<std::string, double> alerts;
  for (const auto& [service, count] : after) {
    const double floor = std::max(options.log_floor, options.log_multiplier * before[service]);
    if (count > floor) alerts[service] = count;
  }
  return alerts;
}

AlertSet ComputeAlerts(const TelemetryBundle& bundle, const SimpleRcaOptions& options) {
  return {MetricAlerts(bundle), TraceAlerts(bundle, options), LogAlerts(bundle, options)};
}

RankedCandidates RankAlerts(const AlertSet& alerts,
                            const std::vector<std::string>& services,
                            const SimpleRcaOptions& options) {
  std::map<std::string, double> score;
  for (const auto& s : services) score[s] = 0.0;
  for (const auto& [s, n] : alerts.metric) score[s] += options.metric_weight * n;
  for (const auto& [s, n] : alerts.trace) score[s] += options.trace_weight * n;
  for (const auto& [s, n] : alerts.log) score[s] += options.log_weight * n;
  return MakeRanking({score.begin(), score.end()});
}

std::vector<std::string> ServiceNames(const Topology& topology) {
  std::vector<std::string> names;
  for (const auto& s : topology.graph.services()) names.push_back(s.name);
  return names;
}

RankedCandidates SimpleRca(const TelemetryBundle& bundle, const Topology& topology,
                           const SimpleRcaOptions& options) {
  if (bundle.metrics.empty() && bundle.logs.empty() && bundle.spans.empty()) {
    throw EmptyInputError("SimpleRCA needs a nonempty bundle");
  }
  return RankAlerts(ComputeAlerts(bundle, options), ServiceNames(topology), options);
}

RankedCandidates RandomBaseline(const std::vector<std::string>& services,
                                uint64_t seed) {
  std::vector<std::string> order = services;
  std::sort(order.begin(), order.end());
  Rng rng(DeriveSeed(seed, "random-baseline"));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformInt(i)]);
  }
  RankedCandidates out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.ranking.emplace_back(order[i], static_cast<double>(order.size() - i));
  }
  return out;
}

RankedCandidates SimpleRcaAlgorithm::Rank(const RcaInput& input) {
  return SimpleRca(*input.bundle, *input.topology, options_);
}

RankedCandidates RandomAlgorithm::Rank(const RcaInput& input) {
  return RandomBaseline(ServiceNames(*input.topology), DeriveSeed(seed_, input.case_id));
}

AlgorithmConfig ParseAlgorithmConfig(const json& doc, uint64_t seed) {
  AlgorithmConfig config;
  config.seed = seed;
  if (doc.is_null()) return config;
  if (doc.contains("simple_rca")) config.simple = ParseSimpleRcaOptions(doc["simple_rca"]);
  if (doc.contains("plugins")) {
    for (const auto& [name, p] : doc["plugins"].items()) {
      if (name == "simple_rca" || name == "random") {
        throw ConfigError(fmt::format("plugin name '{}' is reserved", name));
      }
      PluginSpec spec;
      spec.name = name;
      spec.command = p.at("command").get<std::string>();
      spec.trainable = p.value("trainable", false);
      spec.timeout_s = p.value("timeout_s", 300.0);
      config.plugins[name] = spec;
    }
  }
  return config;
}

std::unique_ptr<RcaAlgorithm> MakeAlgorithm(const std::string& name,
                                            const AlgorithmConfig& config) {
  if (name == "simple_rca") return std::make_unique<SimpleRcaAlgorithm>(config.simple);
  if (name == "random") return std::make_unique<RandomAlgorithm>(config.seed);
  auto it = config.plugins.find(name);
  if (it != config.plugins.end()) return std::make_unique<PluginAlgorithm>(it->second);
  throw ConfigError(fmt::format("unknown algorithm '{}'", name));
}

}  // namespace rcabench
