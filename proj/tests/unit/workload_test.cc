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

#include "rcabench/workload.h"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

double ExpectedModulatedCount(double mean, double m, double period, double t) {
  return mean * t + mean * m * period / (2 * M_PI) * (1 - std::cos(2 * M_PI * t / period));
}

TEST(RateScheduleTest, SinusoidAndCap) {
  RateSchedule r;
  r.mean_qps = 10;
  r.modulation = 0.5;
  r.period_s = 100;
  EXPECT_DOUBLE_EQ(r.Rate(0), 10);
  EXPECT_DOUBLE_EQ(r.Rate(25), 15);
  EXPECT_DOUBLE_EQ(r.Rate(75), 5);
  r.cap_qps = 12;
  EXPECT_DOUBLE_EQ(r.Rate(25), 12);
  EXPECT_DOUBLE_EQ(r.MaxRate(100), 12);
}

TEST(RateScheduleTest, SegmentsOverrideSinusoid) {
  RateSchedule r;
  r.segments = {{0, 10, 5}, {10, 20, 20}};
  EXPECT_DOUBLE_EQ(r.Rate(3), 5);
  EXPECT_DOUBLE_EQ(r.Rate(10), 20);
  EXPECT_DOUBLE_EQ(r.Rate(50), 20);
  EXPECT_DOUBLE_EQ(r.MaxRate(20), 20);
}

TEST(GenerateArrivalsTest, ReferenceProfileMatchesIntegratedRate) {
  const Topology t = ReferenceTopology("trainticket50");
  const auto arrivals = GenerateArrivals(ReferenceProfile(720, 3), t);
  const double expected = ExpectedModulatedCount(16.47, 0.5, 300, 720);
  EXPECT_NEAR(arrivals.size(), expected, 4 * std::sqrt(expected));
  for (std::size_t i = 1; i < arrivals.size(); ++i) {
    ASSERT_LE(arrivals[i - 1].time_s, arrivals[i].time_s);
  }
  EXPECT_LT(arrivals.back().time_s, 720);
}

TEST(GenerateArrivalsTest, SegmentCounts) {
  const Topology t = ReferenceTopology("chain3");
  WorkloadProfile p;
  p.rate.segments = {{0, 100, 5}, {100, 200, 20}};
  p.duration_s = 200;
  const auto arrivals = GenerateArrivals(p, t);
  int first = 0, second = 0;
  for (const auto& a : arrivals) (a.time_s < 100 ? first : second)++;
  EXPECT_NEAR(first, 500, 4 * std::sqrt(500.0));
  EXPECT_NEAR(second, 2000, 4 * std::sqrt(2000.0));
}

TEST(GenerateArrivalsTest, Deterministic) {
  const Topology t = ReferenceTopology("trainticket50");
  const auto p = ReferenceProfile(60, 9);
  EXPECT_EQ(GenerateArrivals(p, t), GenerateArrivals(p, t));
  auto q = p;
  q.seed = 10;
  EXPECT_NE(GenerateArrivals(p, t), GenerateArrivals(q, t));
}

TEST(GenerateArrivalsTest, UniformPolicyCoversBookingPaths) {
  const Topology t = ReferenceTopology("trainticket50");
  WorkloadProfile p;
  p.rate.mean_qps = 100;
  p.duration_s = 100;
  p.workflow_weights = {{"booking", 1}};
  for (const auto* wf : t.TopLevelWorkflows()) {
    if (wf->name != "booking") p.workflow_weights[wf->name] = 0;
  }
  std::map<uint64_t, int> hits;
  for (const auto& a : GenerateArrivals(p, t)) {
    ASSERT_EQ(a.workflow, "booking");
    ++hits[a.path_id];
  }
  EXPECT_EQ(hits.size(), 36u);
}

TEST(GenerateArrivalsTest, WeightedPolicyHonoursZeroWeights) {
  const Topology t = ReferenceTopology("trainticket50");
  WorkloadProfile p;
  p.policy = PathPolicy::kWeighted;
  p.duration_s = 30;
  for (const auto* wf : t.TopLevelWorkflows()) p.workflow_weights[wf->name] = 0;
  p.workflow_weights["booking"] = 1;
  // Sub-workflows sample their own states, so pin every state.
  for (const auto& wf : t.workflows) {
    for (const auto& state : wf.states) {
      std::vector<double> w(state.transitions.size(), 0.0);
      w.back() = 1.0;
      p.transition_weights[wf.name + "/" + state.name] = w;
    }
  }
  const auto arrivals = GenerateArrivals(p, t);
  ASSERT_FALSE(arrivals.empty());
  for (const auto& a : arrivals) EXPECT_EQ(a.path_id, arrivals.front().path_id);
}

TEST(WorkloadProfileTest, ParseAndValidate) {
  const Topology t = ReferenceTopology("chain3");
  const auto p = ParseWorkloadProfile(
      {{"qps", 4.0}, {"modulation", 0.2}, {"seed", 5}, {"duration_s", 30}});
  EXPECT_DOUBLE_EQ(p.rate.mean_qps, 4.0);
  EXPECT_EQ(p.seed, 5u);
  EXPECT_NO_THROW(p.Validate(t));
  EXPECT_EQ(ParseWorkloadProfile(WorkloadProfileToJson(p)).rate.modulation, 0.2);
  EXPECT_THROW(ParseWorkloadProfile({{"policy", "zipf"}}), ConfigError);
  auto bad = p;
  bad.rate.modulation = 1.0;
  EXPECT_THROW(bad.Validate(t), ConfigError);
  bad = p;
  bad.workflow_weights["missing"] = 1;
  EXPECT_THROW(bad.Validate(t), ConfigError);
}

}  // namespace
}  // namespace rcabench
