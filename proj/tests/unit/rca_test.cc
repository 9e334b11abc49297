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
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

TelemetryBundle Base() {
  TelemetryBundle b;
  b.windows = {0, 100000, 200000};
  for (int s = 0; s < 200; ++s) {
    for (const char* svc : {"A", "B", "C"}) {
      b.metrics.push_back({s * 1000, svc, "", "", "cpu_usage", 0.3 + 0.01 * (s % 3)});
    }
  }
  return b;
}

TEST(MakeRankingTest, ScoreThenNameAndDeduplicated) {
  const auto r = MakeRanking({{"b", 1}, {"a", 1}, {"c", 5}, {"a", 0}});
  ASSERT_EQ(r.ranking.size(), 3u);
  EXPECT_EQ(r.ranking[0].first, "c");
  EXPECT_EQ(r.ranking[1].first, "a");
  EXPECT_EQ(r.ranking[2].first, "b");
  EXPECT_EQ(r.RankOf("b"), 3u);
  EXPECT_EQ(r.RankOf("z"), 0u);
}

// Threshold = max(mean + 3 sd, p95) of the normal series.
TEST(MetricAlertsTest, CountsPointsAboveThreshold) {
  auto b = Base();
  for (auto& m : b.metrics) {
    if (m.service == "B" && m.timestamp_ms >= 150000) m.value = 2;
  }
  const auto alerts = MetricAlerts(b);
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_EQ(alerts.at("B"), 50);
}

TEST(TraceAlertsTest, ThreeTimesP95Gate) {
  auto b = Base();
  for (int i = 0; i < 100; ++i) {
    b.spans.push_back({"n" + std::to_string(i), "s", "", "A", "a-0", "op", i * 1000,
                       10000, SpanStatus::kOk, 200});
    b.spans.push_back({"f" + std::to_string(i), "s", "", "A", "a-0", "op",
                       100000 + i * 1000, i < 90 ? 10000 : 40000, SpanStatus::kOk, 200});
  }
  EXPECT_EQ(TraceAlerts(b).at("A"), 10);
  SimpleRcaOptions o;
  o.binary_trace_alerts = true;
  EXPECT_EQ(TraceAlerts(b, o).at("A"), 1);
  o.trace_multiplier = 4;
  EXPECT_TRUE(TraceAlerts(b, o).empty());
}

TEST(LogAlertsTest, FloorAndKeywords) {
  auto b = Base();
  for (int i = 0; i < 6; ++i) {
    b.logs.push_back({150000 + i, "C", "c-0", "t", Severity::kWarn, "x", "Upstream failure"});
  }
  for (int i = 0; i < 5; ++i) {
    b.logs.push_back({150000 + i, "A", "a-0", "t", Severity::kError, "x", "boom"});
  }
  const auto alerts = LogAlerts(b);
  EXPECT_EQ(alerts.size(), 1u);  // A sits at the floor of 5
  EXPECT_EQ(alerts.at("C"), 6);
  for (int i = 0; i < 3; ++i) {
    b.logs.push_back({5000 + i, "C", "c-0", "t", Severity::kError, "x", "boom"});
  }
  EXPECT_TRUE(LogAlerts(b).empty());  // needs more than twice the normal count
}

TEST(SimpleRcaTest, RanksEveryServiceAndPutsCulpritFirst) {
  auto b = Base();
  for (auto& m : b.metrics) {
    if (m.service == "C" && m.timestamp_ms >= 100000) m.value = 3;
    if (m.service == "A" && m.timestamp_ms >= 190000) m.value = 3;
  }
  const auto t = ReferenceTopology("chain3");
  const auto r = SimpleRca(b, t);
  ASSERT_EQ(r.ranking.size(), 3u);
  EXPECT_EQ(r.ranking[0].first, "C");
  EXPECT_EQ(r.ranking[1].first, "A");
  EXPECT_EQ(r.ranking[2].second, 0);
  EXPECT_THROW(SimpleRca(TelemetryBundle{}, t), EmptyInputError);
}

TEST(RandomBaselineTest, SeededPermutation) {
  const std::vector<std::string> services = {"d", "a", "c", "b"};
  const auto r1 = RandomBaseline(services, 3);
  const auto r2 = RandomBaseline({"a", "b", "c", "d"}, 3);
  EXPECT_EQ(r1.ranking, r2.ranking);
  std::set<std::string> names;
  for (const auto& [name, score] : r1.ranking) names.insert(name);
  EXPECT_EQ(names.size(), 4u);
  int different = 0;
  for (uint64_t s = 0; s < 20; ++s) {
    different += RandomBaseline(services, s).ranking != r1.ranking ? 1 : 0;
  }
  EXPECT_GT(different, 10);
}

TEST(AlgorithmConfigTest, ParseAndFactory) {
  const auto config = ParseAlgorithmConfig(
      {{"simple_rca", {{"trace_multiplier", 2.0}}},
       {"plugins", {{"ext", {{"command", "cat"}, {"trainable", true}, {"timeout_s", 3}}}}}},
      5);
  EXPECT_DOUBLE_EQ(config.simple.trace_multiplier, 2.0);
  EXPECT_TRUE(config.plugins.at("ext").trainable);
  EXPECT_EQ(MakeAlgorithm("simple_rca", config)->name(), "simple_rca");
  EXPECT_TRUE(MakeAlgorithm("ext", config)->requires_training());
  EXPECT_THROW(MakeAlgorithm("oracle", config), ConfigError);
  EXPECT_THROW(ParseSimpleRcaOptions({{"weight", 1}}), ConfigError);
}

constexpr const char* kCountingPlugin = R"(
n=0
while read cmd rest; do
  case "$cmd" in
    train) n=$((n+1)) ;;
    fit) echo ok ;;
    rank) printf 'B\t2\nA\t%s\nend\n' "$n" ;;
  esac
done)";

TEST(PluginAlgorithmTest, TrainThenRank) {
  PluginAlgorithm plugin({"counting", kCountingPlugin, true, 10});
  const auto b = Base();
  const auto t = ReferenceTopology("chain3");
  RcaInput input{&b, &t, "case-1", "/tmp/none"};
  plugin.Train({{"/tmp/x", b.windows}, {"/tmp/y", b.windows}, {"/tmp/z", b.windows}});
  const auto r = plugin.Rank(input);
  ASSERT_EQ(r.ranking.size(), 2u);
  EXPECT_EQ(r.ranking[0].first, "A");
  EXPECT_EQ(r.ranking[0].second, 3);
  EXPECT_EQ(plugin.Rank(input).ranking, r.ranking);
}

TEST(PluginAlgorithmTest, CrashTimeoutAndGarbage) {
  const auto b = Base();
  const auto t = ReferenceTopology("chain3");
  RcaInput input{&b, &t, "case-1", "/tmp/none"};
  PluginAlgorithm crash({"crash", "read x; exit 3", false, 5});
  EXPECT_THROW(crash.Rank(input), PluginError);
  EXPECT_THROW(crash.Rank(input), PluginError);
  PluginAlgorithm slow({"slow", "sleep 5", false, 0.2});
  EXPECT_THROW(slow.Rank(input), PluginError);
  PluginAlgorithm garbage({"garbage", "read x; echo 'A 1'", false, 5});
  EXPECT_THROW(garbage.Rank(input), PluginError);
  PluginAlgorithm refuse({"refuse", "read x; echo no", true, 5});
  EXPECT_THROW(refuse.Train({{"/tmp/x", b.windows}}), PluginError);
}

}  // namespace
}  // namespace rcabench
