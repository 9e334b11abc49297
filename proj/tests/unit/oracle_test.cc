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

#include <cmath>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Roots spaced 10 ms apart starting at the window start.
void AddRoots(TelemetryBundle& b, int64_t start_ms, int total, int ok, double ms,
              const std::string& prefix) {
  for (int i = 0; i < total; ++i) {
    Span s;
    s.trace_id = prefix + std::to_string(i);
    s.span_id = s.trace_id + "-0";
    s.service = "A";
    s.pod = "a-0";
    s.operation = "chain";
    s.start_ms = start_ms + 10 * i;
    s.duration_us = static_cast<int64_t>(ms * 1000);
    if (i >= ok) {
      s.status = SpanStatus::kError;
      s.http_code = 500;
    }
    b.spans.push_back(s);
  }
}

TelemetryBundle Windows() {
  TelemetryBundle b;
  b.windows = {0, 100000, 200000};
  return b;
}

TEST(TwoProportionZTest, WorkedExample) {
  // (0.99 - 0.8) / sqrt(p(1 - p)(1/1000 + 1/500)) with p = 1390/1500.
  EXPECT_NEAR(TwoProportionZ(990, 1000, 400, 500), 13.30701020521516, 1e-9);
  EXPECT_EQ(TwoProportionZ(10, 10, 10, 10), 0);
  EXPECT_EQ(TwoProportionZ(0, 0, 1, 2), 0);
  EXPECT_LT(TwoProportionZ(400, 500, 990, 1000), 0);
}

TEST(ValidateCaseTest, SuccessRateDrop) {
  auto b = Windows();
  AddRoots(b, 0, 1000, 990, 100, "n");
  AddRoots(b, 100000, 500, 400, 100, "f");
  const auto v = ValidateCase(b);
  EXPECT_EQ(v.label, Verdict::kHasAnomaly);
  EXPECT_NEAR(v.z, 13.3, 0.1);
  ASSERT_EQ(v.triggered.size(), 1u);
  EXPECT_EQ(v.triggered[0], kSuccessRateDrop);
  EXPECT_EQ(v.normal_success, 990u);
  EXPECT_EQ(v.fault_total, 500u);
}

TEST(ValidateCaseTest, IdenticalWindowsAreQuiet) {
  auto b = Windows();
  AddRoots(b, 0, 200, 200, 100, "n");
  AddRoots(b, 100000, 200, 200, 100, "f");
  const auto v = ValidateCase(b);
  EXPECT_EQ(v.label, Verdict::kNoAnomaly);
  EXPECT_EQ(v.z, 0);
  EXPECT_TRUE(v.triggered.empty());
}

TEST(ValidateCaseTest, LatencyRules) {
  auto b = Windows();
  AddRoots(b, 0, 200, 200, 100, "n");
  AddRoots(b, 100000, 200, 200, 300, "f");  // exactly 3x: not above
  EXPECT_EQ(ValidateCase(b).label, Verdict::kNoAnomaly);

  b = Windows();
  AddRoots(b, 0, 200, 200, 100, "n");
  AddRoots(b, 100000, 200, 200, 301, "f");
  auto v = ValidateCase(b);
  EXPECT_EQ(v.label, Verdict::kHasAnomaly);
  EXPECT_EQ(v.triggered, std::vector<std::string>{std::string(kAdaptiveLatency)});

  b = Windows();
  AddRoots(b, 0, 200, 200, 5000, "n");
  AddRoots(b, 100000, 200, 200, 10001, "f");
  v = ValidateCase(b);
  EXPECT_EQ(v.triggered, std::vector<std::string>{std::string(kHardLatency)});
}

TEST(ValidateCaseTest, InsufficientData) {
  auto b = Windows();
  AddRoots(b, 0, 200, 200, 100, "n");
  AddRoots(b, 100000, 29, 0, 100, "f");
  const auto v = ValidateCase(b);
  EXPECT_TRUE(v.insufficient_data);
  EXPECT_EQ(v.label, Verdict::kNoAnomaly);
  b.windows = {0, 300000, 200000};
  EXPECT_THROW(ValidateCase(b), StorageError);
}

TEST(ValidationVerdictTest, JsonRoundTrip) {
  auto b = Windows();
  AddRoots(b, 0, 100, 99, 100, "n");
  AddRoots(b, 100000, 100, 50, 400, "f");
  const auto v = ValidateCase(b);
  const auto w = ValidationVerdict::FromJson(v.ToJson());
  EXPECT_EQ(w.label, v.label);
  EXPECT_EQ(w.triggered, v.triggered);
  EXPECT_DOUBLE_EQ(w.z, v.z);
  EXPECT_EQ(w.fault_success, 50u);
}

TEST(ClassifyRatiosTest, ThreePatterns) {
  EXPECT_EQ(ClassifyRatios({{"A", 1.1}, {"B", 1.9}}, "B", 2).type, PatternType::kTypeII);
  EXPECT_EQ(ClassifyRatios({{"A", 1.1}, {"B", 5}}, "B", 2).type, PatternType::kTypeI);
  EXPECT_EQ(ClassifyRatios({{"A", 6}, {"B", 5}}, "B", 2).type, PatternType::kTypeIII);
  EXPECT_EQ(ClassifyRatios({{"A", 5}, {"B", 5}}, "B", 2).type, PatternType::kTypeI);
  EXPECT_EQ(ClassifyRatios({{"A", kInf}, {"B", 1}}, "B", 2).type, PatternType::kTypeIII);
}

TEST(SymptomRatioTest, ZeroBaselines) {
  EXPECT_EQ(SymptomRatio(0, 0), 1);
  EXPECT_EQ(SymptomRatio(3, 0), kInf);
  EXPECT_DOUBLE_EQ(SymptomRatio(3, 2), 1.5);
}

TEST(ClassifyPatternTest, MetricAndLogSymptoms) {
  auto b = Windows();
  for (int s = 0; s < 200; ++s) {
    const double fault = s >= 100 ? 1 : 0;
    b.metrics.push_back({s * 1000, "A", "a-0", "a-0-main", "cpu_usage", 0.2});
    b.metrics.push_back({s * 1000, "B", "b-0", "b-0-main", "cpu_usage", 0.2 + fault});
  }
  auto p = ClassifyPattern(b, {"A", "B"}, "B", FaultCategory::kResource);
  EXPECT_EQ(p.type, PatternType::kTypeI);
  EXPECT_NEAR(p.ratios["B"], 6.0, 1e-9);
  EXPECT_EQ(ClassifyPattern(b, {"A", "B"}, "A", FaultCategory::kResource).type,
            PatternType::kTypeIII);
  // Time faults have no metric symptoms, only error logs count.
  EXPECT_EQ(ClassifyPattern(b, {"A", "B"}, "B", FaultCategory::kTime).type,
            PatternType::kTypeII);
  b.logs.push_back({150000, "A", "a-0", "t", Severity::kError, "code-exception", "x"});
  p = ClassifyPattern(b, {"A", "B"}, "B", FaultCategory::kTime);
  EXPECT_EQ(p.type, PatternType::kTypeIII);
  EXPECT_EQ(p.ratios["A"], kInf);
}

TEST(AuditTest, MissingModalityAndPropagation) {
  auto b = Windows();
  AddRoots(b, 0, 100, 100, 100, "n");
  AddRoots(b, 100000, 100, 100, 100, "f");
  auto r = AuditObservability(b, FaultCategory::kResource);
  EXPECT_EQ(r.missing, std::vector<std::string>{"metrics"});
  EXPECT_FALSE(r.complete());
  r = AuditObservability(b, FaultCategory::kHttp);
  EXPECT_TRUE(r.modality_complete);
  EXPECT_FALSE(r.propagates);

  b = Windows();
  AddRoots(b, 0, 100, 100, 100, "n");
  AddRoots(b, 100000, 100, 100, 120, "f");
  b.spans[0].duration_us = 90000;  // give the normal window some spread
  r = AuditObservability(b, FaultCategory::kHttp);
  EXPECT_TRUE(r.propagates);
  EXPECT_GT(r.latency_z, 2.326);
}

TEST(OracleParamsTest, ParseRejectsUnknownKeys) {
  const auto p = ParseOracleParams({{"z_crit", 1.645}, {"n_min", 10}});
  EXPECT_DOUBLE_EQ(p.z_crit, 1.645);
  EXPECT_EQ(p.n_min, 10);
  EXPECT_EQ(ParseOracleParams(OracleParamsToJson(p)).n_min, 10);
  EXPECT_THROW(ParseOracleParams({{"alpha", 0.05}}), ConfigError);
}

}  // namespace
}  // namespace rcabench
