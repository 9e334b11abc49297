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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rcabench {

enum class SpanStatus { kOk, kError, kTimeout };
enum class Severity { kInfo, kWarn, kError };

std::string_view StatusName(SpanStatus status);
std::string_view SeverityName(Severity severity);

// Timestamps are integral milliseconds since case start (warm-up included);
// they serialize as decimal seconds with millisecond precision.
struct MetricPoint {
  int64_t timestamp_ms = 0;
  std::string service;
  std::string pod;
  // Empty for pod-level metrics.
  std::string container;
  std::string metric;
  double value = 0.0;

  bool operator==(const MetricPoint&) const = default;
};

struct LogRecord {
  int64_t timestamp_ms = 0;
  std::string service;
  std::string pod;
  // Empty for background logs.
  std::string trace_id;
  Severity severity = Severity::kInfo;
  std::string template_id;
  std::string message;

  bool operator==(const LogRecord&) const = default;
};

struct Span {
  std::string trace_id;
  std::string span_id;
  std::string parent_span_id;  // empty for the root
  std::string service;
  std::string pod;
  std::string operation;
  int64_t start_ms = 0;
  int64_t duration_us = 0;
  SpanStatus status = SpanStatus::kOk;
  int http_code = 200;

  bool IsRoot() const { return parent_span_id.empty(); }
  double DurationMs() const { return duration_us / 1000.0; }
  int64_t EndUs() const { return start_ms * 1000 + duration_us; }
  bool operator==(const Span&) const = default;
};

struct CaseWindows {
  int64_t normal_start_ms = 0;
  int64_t fault_start_ms = 0;
  int64_t fault_end_ms = 0;

  bool operator==(const CaseWindows&) const = default;
};

// Half-open [start, end).
struct TimeWindow {
  int64_t start_ms = 0;
  int64_t end_ms = 0;

  bool Contains(int64_t t) const { return t >= start_ms && t < end_ms; }
};

inline TimeWindow NormalWindow(const CaseWindows& w) {
  return {w.normal_start_ms, w.fault_start_ms};
}
inline TimeWindow FaultWindow(const CaseWindows& w) {
  return {w.fault_start_ms, w.fault_end_ms};
}
inline TimeWindow FullWindow(const CaseWindows& w) {
  return {w.normal_start_ms, w.fault_end_ms};
}

struct TelemetryBundle {
  std::vector<MetricPoint> metrics;
  std::vector<LogRecord> logs;
  std::vector<Span> spans;
  CaseWindows windows;

  bool operator==(const TelemetryBundle&) const = default;
};

inline constexpr std::string_view kMetricsFile = "metrics.ndrec";
inline constexpr std::string_view kLogsFile = "logs.ndrec";
inline constexpr std::string_view kTracesFile = "traces.ndrec";
inline constexpr std::string_view kMetaFile = "meta.rec";

// Record serialization with a stable field order.
std::string MetricToLine(const MetricPoint& point);
std::string LogToLine(const LogRecord& record);
std::string SpanToLine(const Span& span);
MetricPoint MetricFromJson(const nlohmann::json& doc);
LogRecord LogFromJson(const nlohmann::json& doc);
Span SpanFromJson(const nlohmann::json& doc);

nlohmann::json WindowsToJson(const CaseWindows& windows);
CaseWindows WindowsFromJson(const nlohmann::json& doc);

// Writes the three record files and a meta file whose first line is a
// "case" record holding the windows plus `case_meta`. Throws StorageError.
void PersistBundle(const TelemetryBundle& bundle, const std::string& case_dir,
                   const nlohmann::json& case_meta = nlohmann::json::object());
TelemetryBundle ReadBundle(const std::string& case_dir);

// Lines of meta.rec, parsed.
std::vector<nlohmann::json> ReadMetaRecords(const std::string& case_dir);
// Replaces every record of `kind` in meta.rec with `record`.
void UpsertMetaRecord(const std::string& case_dir, const std::string& kind,
                      nlohmann::json record);

enum class Modality { kMetrics, kLogs, kTraces };

using Filters = std::map<std::string, std::string>;

struct QueryResult {
  std::vector<MetricPoint> metrics;
  std::vector<LogRecord> logs;
  std::vector<Span> spans;

  std::size_t size() const { return metrics.size() + logs.size() + spans.size(); }
};

class UnknownFilterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Records with timestamp in the window whose fields equal every filter,
// stably sorted by (timestamp, id).
QueryResult QueryWindow(const TelemetryBundle& bundle, TimeWindow window,
                        Modality modality, const Filters& filters = {});

double Mean(const std::vector<double>& values);
// Population standard deviation.
double StdDev(const std::vector<double>& values);
// Nearest rank: the value at 1-based index ceil(q * n) of the sorted data.
double Percentile(std::vector<double> values, double q);

struct SeriesStats {
  double mean = 0.0;
  double std = 0.0;
  double p95 = 0.0;
};

// Throws EmptyInputError on empty input.
SeriesStats ComputeSeriesStats(const std::vector<double>& values);

}  // namespace rcabench
