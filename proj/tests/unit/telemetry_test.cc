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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string& name) {
  auto dir = fs::temp_directory_path() /
             ("rcabench_telemetry_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

TelemetryBundle SmallBundle() {
  TelemetryBundle b;
  b.windows = {1000, 5000, 9000};
  b.metrics = {{6000, "B", "b-0", "b-0-main", "cpu_usage", 0.25},
               {2000, "A", "a-0", "", "request_count", 12},
               {2000, "A", "a-0", "a-0-main", "cpu_usage", 0.5}};
  b.logs = {{2500, "A", "a-0", "t1", Severity::kInfo, "request-done", "ok"},
            {6500, "B", "b-0", "t2", Severity::kError, "code-exception",
             "threw \"IOException\"\n"}};
  b.spans = {{"t1", "s1", "", "A", "a-0", "chain", 2500, 60250, SpanStatus::kOk, 200},
             {"t1", "s2", "s1", "B", "b-0", "b_op", 2501, 1500, SpanStatus::kOk, 200},
             {"t2", "s3", "", "A", "a-0", "chain", 6500, 10000000, SpanStatus::kTimeout, 504}};
  return b;
}

TEST(RecordLineTest, FixedFieldOrder) {
  const auto b = SmallBundle();
  EXPECT_EQ(MetricToLine(b.metrics[0]),
            R"({"timestamp":6.000,"service":"B","pod":"b-0","container":"b-0-main",)"
            R"("metric":"cpu_usage","value":0.25})");
  EXPECT_EQ(SpanToLine(b.spans[0]),
            R"({"trace_id":"t1","span_id":"s1","parent_span_id":"","service":"A",)"
            R"("pod":"a-0","operation":"chain","start":2.500,"duration":60.250,)"
            R"("status":"OK","http_code":200})");
  EXPECT_EQ(LogToLine(b.logs[1]),
            R"({"timestamp":6.500,"service":"B","pod":"b-0","trace_id":"t2",)"
            R"("severity":"ERROR","template_id":"code-exception",)"
            R"("message":"threw \"IOException\"\n"})");
}

TEST(RecordLineTest, ParsesBack) {
  const auto b = SmallBundle();
  for (const auto& m : b.metrics) {
    EXPECT_EQ(MetricFromJson(nlohmann::json::parse(MetricToLine(m))), m);
  }
  for (const auto& l : b.logs) {
    EXPECT_EQ(LogFromJson(nlohmann::json::parse(LogToLine(l))), l);
  }
  for (const auto& s : b.spans) {
    EXPECT_EQ(SpanFromJson(nlohmann::json::parse(SpanToLine(s))), s);
  }
}

TEST(PersistTest, RoundTripAndMeta) {
  const auto dir = ScratchDir("roundtrip");
  const auto b = SmallBundle();
  PersistBundle(b, dir.string(), {{"case_id", "x"}});
  for (auto name : {kMetricsFile, kLogsFile, kTracesFile, kMetaFile}) {
    EXPECT_TRUE(fs::exists(dir / std::string(name)));
  }
  EXPECT_EQ(ReadBundle(dir.string()), b);
  auto meta = ReadMetaRecords(dir.string());
  ASSERT_EQ(meta.size(), 1u);
  EXPECT_EQ(meta[0]["record"], "case");
  EXPECT_EQ(meta[0]["case_id"], "x");
  UpsertMetaRecord(dir.string(), "verdict", {{"label", "NoAnomaly"}});
  UpsertMetaRecord(dir.string(), "verdict", {{"label", "HasAnomaly"}});
  meta = ReadMetaRecords(dir.string());
  ASSERT_EQ(meta.size(), 2u);
  EXPECT_EQ(meta[1]["label"], "HasAnomaly");
  EXPECT_EQ(ReadBundle(dir.string()).windows, b.windows);
  fs::remove_all(dir);
}

TEST(PersistTest, MissingOrCorruptFiles) {
  const auto dir = ScratchDir("corrupt");
  EXPECT_THROW(ReadBundle(dir.string()), StorageError);
  PersistBundle(SmallBundle(), dir.string());
  {
    std::ofstream out(dir / std::string(kTracesFile), std::ios::app);
    out << "{not json\n";
  }
  EXPECT_THROW(ReadBundle(dir.string()), StorageError);
  fs::remove_all(dir);
}

TEST(QueryWindowTest, HalfOpenWindowsAndFilters) {
  const auto b = SmallBundle();
  const auto normal = QueryWindow(b, NormalWindow(b.windows), Modality::kMetrics);
  ASSERT_EQ(normal.metrics.size(), 2u);
  EXPECT_EQ(normal.metrics[0].container, "");  // sorted by id within a timestamp
  EXPECT_EQ(QueryWindow(b, {2500, 2501}, Modality::kTraces).spans.size(), 1u);
  EXPECT_EQ(QueryWindow(b, FullWindow(b.windows), Modality::kTraces,
                        {{"status", "TIMEOUT"}}).spans.size(), 1u);
  EXPECT_EQ(QueryWindow(b, FullWindow(b.windows), Modality::kTraces,
                        {{"http_code", "504"}, {"service", "A"}}).size(), 1u);
  EXPECT_EQ(QueryWindow(b, FullWindow(b.windows), Modality::kLogs,
                        {{"severity", "ERROR"}}).logs.size(), 1u);
  EXPECT_EQ(QueryWindow(b, {0, 100}, Modality::kLogs).size(), 0u);
  EXPECT_THROW(QueryWindow(b, FullWindow(b.windows), Modality::kMetrics,
                           {{"severity", "ERROR"}}),
               UnknownFilterError);
  EXPECT_THROW(QueryWindow(b, FullWindow(b.windows), Modality::kTraces,
                           {{"color", "red"}}),
               UnknownFilterError);
}

// Nearest-rank percentile: rank = ceil(q * n).
TEST(StatsTest, NearestRankPercentile) {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(21 - i);
  EXPECT_EQ(Percentile(v, 0.95), 19);
  EXPECT_EQ(Percentile(v, 0.5), 10);
  EXPECT_EQ(Percentile(v, 1.0), 20);
  EXPECT_EQ(Percentile(v, 0.0), 1);
  EXPECT_EQ(Percentile({7}, 0.95), 7);
  std::vector<double> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i);
  EXPECT_EQ(Percentile(hundred, 0.95), 95);
  EXPECT_THROW(Percentile({}, 0.5), EmptyInputError);
  EXPECT_THROW(Percentile({1}, 1.5), std::invalid_argument);
}

TEST(StatsTest, MeanAndPopulationStdDev) {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(Mean(v), 5.0);
  EXPECT_DOUBLE_EQ(StdDev(v), 2.0);
  const auto s = ComputeSeriesStats(v);
  EXPECT_EQ(s.p95, 9);
  EXPECT_THROW(Mean({}), EmptyInputError);
}

}  // namespace
}  // namespace rcabench
