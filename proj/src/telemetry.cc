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

#include "rcabench/telemetry.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "rcabench/common.h"

namespace rcabench {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view StatusName(SpanStatus status) {
  switch (status) {
    case SpanStatus::kOk: return "OK";
    case SpanStatus::kError: return "ERROR";
    case SpanStatus::kTimeout: return "TIMEOUT";
  }
  return "?";
}

std::string_view SeverityName(Severity severity) {
  switch (severity) {
    case Severity::kInfo: return "INFO";
    case Severity::kWarn: return "WARN";
    case Severity::kError: return "ERROR";
  }
  return "?";
}

namespace {

void AppendQuoted(std::string& out, std::string_view text) {
  out.push_back('"');
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          out += fmt::format("\\u{:04x}", static_cast<int>(c));
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

// Builds {"k":v,...} in call order.
class LineBuilder {
 public:
  LineBuilder() { line_.reserve(160); line_.push_back('{'); }

  LineBuilder& Text(std::string_view key, std::string_view value) {
    Key(key);
    AppendQuoted(line_, value);
    return *this;
  }
  LineBuilder& Raw(std::string_view key, std::string_view value) {
    Key(key);
    line_ += value;
    return *this;
  }
  std::string Finish() {
    line_.push_back('}');
    return std::move(line_);
  }

 private:
  void Key(std::string_view key) {
    if (line_.size() > 1) line_.push_back(',');
    AppendQuoted(line_, key);
    line_.push_back(':');
  }
  std::string line_;
};

int64_t MillisFromSeconds(const json& value) {
  return std::llround(value.get<double>() * 1000.0);
}

SpanStatus ParseStatus(const std::string& text) {
  if (text == "OK") return SpanStatus::kOk;
  if (text == "ERROR") return SpanStatus::kError;
  if (text == "TIMEOUT") return SpanStatus::kTimeout;
  throw StorageError(fmt::format("unknown span status '{}'", text));
}

Severity ParseSeverity(const std::string& text) {
  if (text == "INFO") return Severity::kInfo;
  if (text == "WARN") return Severity::kWarn;
  if (text == "ERROR") return Severity::kError;
  throw StorageError(fmt::format("unknown severity '{}'", text));
}

}  // namespace

std::string MetricToLine(const MetricPoint& p) {
  return LineBuilder()
      .Raw("timestamp", FormatMillisAsSeconds(p.timestamp_ms))
      .Text("service", p.service)
      .Text("pod", p.pod)
      .Text("container", p.container)
      .Text("metric", p.metric)
      .Raw("value", fmt::format("{}", p.value))
      .Finish();
}

std::string LogToLine(const LogRecord& r) {
  return LineBuilder()
      .Raw("timestamp", FormatMillisAsSeconds(r.timestamp_ms))
      .Text("service", r.service)
      .Text("pod", r.pod)
      .Text("trace_id", r.trace_id)
      .Text("severity", SeverityName(r.severity))
      .Text("template_id", r.template_id)
      .Text("message", r.message)
      .Finish();
}

std::string SpanToLine(const Span& s) {
  return LineBuilder()
      .Text("trace_id", s.trace_id)
      .Text("span_id", s.span_id)
      .Text("parent_span_id", s.parent_span_id)
      .Text("service", s.service)
      .Text("pod", s.pod)
      .Text("operation", s.operation)
      .Raw("start", FormatMillisAsSeconds(s.start_ms))
      .Raw("duration", FormatMicrosAsMillis(s.duration_us))
      .Text("status", StatusName(s.status))
      .Raw("http_code", fmt::format("{}", s.http_code))
      .Finish();
}

MetricPoint MetricFromJson(const json& doc) {
  MetricPoint p;
  p.timestamp_ms = MillisFromSeconds(doc.at("timestamp"));
  p.service = doc.at("service").get<std::string>();
  p.pod = doc.at("pod").get<std::string>();
  p.container = doc.at("container").get<std::string>();
  p.metric = doc.at("metric").get<std::string>();
  p.value = doc.at("value").get<double>();
  return p;
}

LogRecord LogFromJson(const json& doc) {
  LogRecord r;
  r.timestamp_ms = MillisFromSeconds(doc.at("timestamp"));
  r.service = doc.at("service").get<std::string>();
  r.pod = doc.at("pod").get<std::string>();
  r.trace_id = doc.at("trace_id").get<std::string>();
  r.severity = ParseSeverity(doc.at("severity").get<std::string>());
  r.template_id = doc.at("template_id").get<std::string>();
  r.message = doc.at("message").get<std::string>();
  return r;
}

Span SpanFromJson(const json& doc) {
  Span s;
  s.trace_id = doc.at("trace_id").get<std::string>();
  s.span_id = doc.at("span_id").get<std::string>();
  s.parent_span_id = doc.at("parent_span_id").get<std::string>();
  s.service = doc.at("service").get<std::string>();
  s.pod = doc.at("pod").get<std::string>();
  s.operation = doc.at("operation").get<std::string>();
  s.start_ms = MillisFromSeconds(doc.at("start"));
  s.duration_us = std::llround(doc.at("duration").get<double>() * 1000.0);
  s.status = ParseStatus(doc.at("status").get<std::string>());
  s.http_code = doc.at("http_code").get<int>();
  return s;
}

json WindowsToJson(const CaseWindows& w) {
  json doc = json::object();
  doc["normal_start"] = w.normal_start_ms / 1000.0;
  doc["fault_start"] = w.fault_start_ms / 1000.0;
  doc["fault_end"] = w.fault_end_ms / 1000.0;
  return doc;
}

CaseWindows WindowsFromJson(const json& doc) {
  return {MillisFromSeconds(doc.at("normal_start")),
          MillisFromSeconds(doc.at("fault_start")),
          MillisFromSeconds(doc.at("fault_end"))};
}

namespace {

template <typename T, typename ToLine>
void WriteRecords(const fs::path& path, const std::vector<T>& records,
                  ToLine to_line) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError(fmt::format("cannot write '{}'", path.string()));
  std::string buffer;
  buffer.reserve(1 << 20);
  for (const auto& record : records) {
    buffer += to_line(record);
    buffer.push_back('\n');
    if (buffer.size() > (1 << 20)) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw StorageError(fmt::format("write failed for '{}'", path.string()));
}

template <typename T, typename FromJson>
std::vector<T> ReadRecords(const fs::path& path, FromJson from_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError(fmt::format("cannot read '{}'", path.string()));
  std::vector<T> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw StorageError(fmt::format("{}:{}: {}", path.string(), number, e.what()));
    }
  }
  return out;
}

void WriteMeta(const fs::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& record : records) out << record.dump() << '\n';
  if (!out) throw StorageError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace

void PersistBundle(const TelemetryBundle& bundle, const std::string& case_dir,
                   const json& case_meta) {
  const fs::path dir(case_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError(fmt::format("cannot create '{}': {}", case_dir, ec.message()));
  WriteRecords(dir / kMetricsFile, bundle.metrics, MetricToLine);
  WriteRecords(dir / kLogsFile, bundle.logs, LogToLine);
  WriteRecords(dir / kTracesFile, bundle.spans, SpanToLine);
  json meta = json::object();
  meta["record"] = "case";
  meta["windows"] = WindowsToJson(bundle.windows);
  for (const auto& [key, value] : case_meta.items()) meta[key] = value;
  WriteMeta(dir / kMetaFile, {meta});
}

std::vector<json> ReadMetaRecords(const std::string& case_dir) {
  const fs::path path = fs::path(case_dir) / kMetaFile;
  std::ifstream in(path);
  if (!in) throw StorageError(fmt::format("cannot read '{}'", path.string()));
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw StorageError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

void UpsertMetaRecord(const std::string& case_dir, const std::string& kind,
                      json record) {
  auto records = ReadMetaRecords(case_dir);
  record["record"] = kind;
  std::erase_if(records, [&](const json& r) { return r.value("record", "") == kind; });
  records.push_back(std::move(record));
  WriteMeta(fs::path(case_dir) / kMetaFile, records);
}

TelemetryBundle ReadBundle(const std::string& case_dir) {
  const fs::path dir(case_dir);
  TelemetryBundle bundle;
  const auto meta = ReadMetaRecords(case_dir);
  if (meta.empty() || !meta.front().contains("windows")) {
    throw StorageError(fmt::format("'{}' has no case windows", case_dir));
  }
  bundle.windows = WindowsFromJson(meta.front()["windows"]);
  bundle.metrics = ReadRecords<MetricPoint>(dir / kMetricsFile, MetricFromJson);
  bundle.logs = ReadRecords<LogRecord>(dir / kLogsFile, LogFromJson);
  bundle.spans = ReadRecords<Span>(dir / kTracesFile, SpanFromJson);
  return bundle;
}

namespace {


template <typename T>
const std::string* FieldOf(const T& record, const std::string& field);

template <>
const std::string* FieldOf(const MetricPoint& p, const std::string& f) {
  if (f == "service") return &p.service;
  if (f == "pod") return &p.pod;
  if (f == "container") return &p.container;
  if (f == "metric") return &p.metric;
  return nullptr;
}

template <>
const std::string* FieldOf(const LogRecord& r, const std::string& f) {
  if (f == "service") return &r.service;
  if (f == "pod") return &r.pod;
  if (f == "trace_id") return &r.trace_id;
  if (f == "template_id") return &r.template_id;
  return nullptr;
}

template <>
const std::string* FieldOf(const Span& s, const std::string& f) {
  if (f == "trace_id") return &s.trace_id;
  if (f == "span_id") return &s.span_id;
  if (f == "parent_span_id") return &s.parent_span_id;
  if (f == "service") return &s.service;
  if (f == "pod") return &s.pod;
  if (f == "operation") return &s.operation;
  return nullptr;
}

// Fields that are not plain strings on the record.
bool MatchesDerived(const LogRecord& r, const std::string& f,
                    const std::string& v, bool& known) {
  known = f == "severity";
  return known && SeverityName(r.severity) == v;
}
bool MatchesDerived(const Span& s, const std::string& f, const std::string& v,
                    bool& known) {
  if (f == "status") {
    known = true;
    return StatusName(s.status) == v;
  }
  if (f == "http_code") {
    known = true;
    return std::to_string(s.http_code) == v;
  }
  known = false;
  return false;
}
bool MatchesDerived(const MetricPoint&, const std::string&, const std::string&,
                    bool& known) {
  known = false;
  return false;
}

template <typename T>
void CheckFilters(const Filters& filters) {
  T probe{};
  for (const auto& [field, value] : filters) {
    bool known = FieldOf(probe, field) != nullptr;
    if (!known) MatchesDerived(probe, field, value, known);
    if (!known) throw UnknownFilterError(fmt::format("unknown filter field '{}'", field));
  }
}

template <typename T>
bool Matches(const T& record, const Filters& filters) {
  for (const auto& [field, value] : filters) {
    if (const auto* text = FieldOf(record, field)) {
      if (*text != value) return false;
    } else {
      bool known;
      if (!MatchesDerived(record, field, value, known)) return false;
    }
  }
  return true;
}

int64_t TimeOf(const MetricPoint& p) { return p.timestamp_ms; }
int64_t TimeOf(const LogRecord& r) { return r.timestamp_ms; }
int64_t TimeOf(const Span& s) { return s.start_ms; }

auto IdOf(const MetricPoint& p) {
  return std::tie(p.service, p.pod, p.container, p.metric);
}
auto IdOf(const LogRecord& r) {
  return std::tie(r.service, r.pod, r.trace_id, r.template_id);
}
auto IdOf(const Span& s) { return std::tie(s.trace_id, s.span_id); }

template <typename T>
std::vector<T> Select(const std::vector<T>& records, TimeWindow window,
                      const Filters& filters) {
  CheckFilters<T>(filters);
  std::vector<T> out;
  for (const auto& record : records) {
    if (window.Contains(TimeOf(record)) && Matches(record, filters)) {
      out.push_back(record);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const T& a, const T& b) {
    if (TimeOf(a) != TimeOf(b)) return TimeOf(a) < TimeOf(b);
    return IdOf(a) < IdOf(b);
  });
  return out;
}

}  // namespace

QueryResult QueryWindow(const TelemetryBundle& bundle, TimeWindow window,
                        Modality modality, const Filters& filters) {
  QueryResult result;
  switch (modality) {
    case Modality::kMetrics:
      result.metrics = Select(bundle.metrics, window, filters);
      break;
    case Modality::kLogs:
      result.logs = Select(bundle.logs, window, filters);
      break;
    case Modality::kTraces:
      result.spans = Select(bundle.spans, window, filters);
      break;
  }
  return result;
}

double Mean(const std::vector<double>& values) {
  if (values.empty()) throw EmptyInputError("mean of empty series");
  return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

double StdDev(const std::vector<double>& values) {
  const double mean = Mean(values);
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return std::sqrt(sum / values.size());
}

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInputError("percentile of empty series");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in [0, 1]");
  const std::size_t n = values.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

SeriesStats ComputeSeriesStats(const std::vector<double>& values) {
  return {Mean(values), StdDev(values), Percentile(values, 0.95)};
}

}  // namespace rcabench
