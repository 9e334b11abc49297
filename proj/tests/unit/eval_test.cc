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

#include "rcabench/eval.h"

#include <cmath>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

// Hand-computed on ranks {1, 2, 4, absent}.
TEST(RankMetricsTest, HandValues) {
  const std::vector<uint64_t> r = {1, 2, 4, kAbsentRank};
  EXPECT_DOUBLE_EQ(TopK(r, 1), 0.25);
  EXPECT_DOUBLE_EQ(TopK(r, 3), 0.5);
  EXPECT_DOUBLE_EQ(TopK(r, 5), 0.75);
  EXPECT_DOUBLE_EQ(AvgK(r, 3), (0.25 + 0.5 + 0.5) / 3);
  EXPECT_DOUBLE_EQ(AvgK(r, 5), (0.25 + 0.5 + 0.5 + 0.75 + 0.75) / 5);
  EXPECT_DOUBLE_EQ(Mrr(r), (1 + 0.5 + 0.25) / 4);
  EXPECT_THROW(TopK({}, 1), EmptyInputError);
  EXPECT_THROW(TopK(r, 0), std::invalid_argument);
  EXPECT_THROW(Mrr({0}), std::invalid_argument);
}

TEST(SummarizeTest, FlagsAndMeanTime) {
  std::vector<CaseResult> rs(2);
  rs[0].rank = 1;
  rs[0].seconds = 1;
  rs[1].rank = kAbsentRank;
  rs[1].flagged = true;
  rs[1].seconds = 3;
  const auto row = SummarizeResults(rs);
  EXPECT_EQ(row.cases, 2u);
  EXPECT_EQ(row.flagged, 1u);
  EXPECT_DOUBLE_EQ(row.top1, 0.5);
  EXPECT_DOUBLE_EQ(row.mrr, 0.5);
  EXPECT_DOUBLE_EQ(row.mean_seconds, 2);
}

TEST(StratifiedSplitTest, PerTypeFractionsAndDeterminism) {
  std::vector<EvalCase> cases;
  for (int i = 0; i < 10; ++i) cases.push_back({"x" + std::to_string(i), "", "PodKill", "A"});
  for (int i = 0; i < 5; ++i) cases.push_back({"y" + std::to_string(i), "", "DNSError", "B"});
  const auto s = StratifiedSplit(cases, 0.8, 1);
  EXPECT_EQ(s.train.size(), 12u);
  EXPECT_EQ(s.test.size(), 3u);
  int dns_test = 0;
  for (auto i : s.test) dns_test += cases[i].fault_type == "DNSError" ? 1 : 0;
  EXPECT_EQ(dns_test, 1);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 15u);
  EXPECT_EQ(StratifiedSplit(cases, 0.8, 1).train, s.train);
  EXPECT_THROW(StratifiedSplit(cases, 1.5, 1), ConfigError);
}

TEST(MaxCallDepthTest, CountsEdges) {
  std::vector<Span> spans = {
      {"t", "a", "", "A", "", "", 0, 1, SpanStatus::kOk, 200},
      {"t", "b", "a", "B", "", "", 0, 1, SpanStatus::kOk, 200},
      {"t", "c", "b", "C", "", "", 0, 1, SpanStatus::kOk, 200},
      {"u", "x", "", "A", "", "", 0, 1, SpanStatus::kOk, 200},
  };
  EXPECT_EQ(MaxCallDepth(spans), 2u);
  EXPECT_EQ(MaxCallDepth({spans[3]}), 0u);
}

TEST(DatasetStatsTest, CoverageAndQps) {
  DatasetStatsBuilder builder({"A", "B", "C", "D"});
  TelemetryBundle b;
  b.windows = {0, 10000, 20000};
  for (int i = 0; i < 40; ++i) {
    b.spans.push_back({"t" + std::to_string(i), "r", "", "A", "", "", i * 500, 1,
                       SpanStatus::kOk, 200});
    b.spans.push_back({"t" + std::to_string(i), "c", "r", "B", "", "", i * 500, 1,
                       SpanStatus::kOk, 200});
  }
  builder.Add(b, "PodKill");
  const auto s = builder.Finish();
  EXPECT_EQ(s.cases, 1u);
  EXPECT_DOUBLE_EQ(s.coverage, 0.5);
  EXPECT_EQ(s.traces, 40u);
  EXPECT_EQ(s.spans, 80u);
  EXPECT_DOUBLE_EQ(s.qps_mean, 2.0);
  EXPECT_EQ(s.max_depth, 1u);
  EXPECT_EQ(s.fault_types.at("PodKill"), 1u);
}

TEST(RestrictToCoresTest, GrantsAtLeastOne) {
  const int granted = RestrictToCores(4);
  EXPECT_GE(granted, 1);
  EXPECT_LE(granted, 4);
}

TEST(ScalabilityTest, ProducesOnePointPerVolume) {
  ScalabilityOptions o;
  o.volumes = {200, 400};
  o.runs = 1;
  o.window_s = 10;
  const auto t = ReferenceTopology("chain3");
  int granted = 0;
  const auto points = ScalabilityRun([] { return std::make_unique<SimpleRcaAlgorithm>(); },
                                     t, o, &granted);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_GE(granted, 1);
  for (const auto& p : points) {
    EXPECT_FALSE(p.timed_out);
    EXPECT_NEAR(p.traces, p.volume, 5 * std::sqrt(p.volume));
  }
}

}  // namespace
}  // namespace rcabench
