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

#include "rcabench/simengine.h"

#include <map>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

CaseProtocol ShortProtocol() {
  CaseProtocol p;
  p.warmup_s = 10;
  p.normal_s = 30;
  p.fault_s = 30;
  return p;
}

FaultSpec Fault(std::string type, FaultCategory category, std::string target,
                std::map<std::string, ParamValue> params = {}) {
  FaultSpec f;
  f.type = std::move(type);
  f.category = category;
  f.target = std::move(target);
  f.params = std::move(params);
  return f;
}

double MeanRootMs(const TelemetryBundle& b, TimeWindow w) {
  double sum = 0;
  int n = 0;
  for (const auto& s : b.spans) {
    if (s.IsRoot() && w.Contains(s.start_ms)) {
      sum += s.DurationMs();
      ++n;
    }
  }
  return n == 0 ? 0 : sum / n;
}

TEST(ContentionTest, LinearThenClamped) {
  EXPECT_DOUBLE_EQ(ContentionFactor(0.5, 0, 10), 1.5);
  EXPECT_DOUBLE_EQ(ContentionFactor(0.5, 2, 10), 3.5);
  EXPECT_DOUBLE_EQ(ContentionFactor(3, 8, 10), 10);
}

TEST(ApplyStressTest, WindowAndOomKill) {
  CaseProtocol p;
  auto f = Fault("CPUStress", FaultCategory::kResource, "c-0", {{"load", 8.0}});
  f.window_start_s = 480;
  f.window_end_s = 720;
  EXPECT_EQ(ApplyStress(f, p, 479.9).load, 0);
  EXPECT_EQ(ApplyStress(f, p, 480).load, 8);
  EXPECT_FALSE(ApplyStress(f, p, 484.9).oom_killed);
  EXPECT_TRUE(ApplyStress(f, p, 485).oom_killed);
  EXPECT_FALSE(ApplyStress(f, p, 720).oom_killed);
  f.params["load"] = 4.0;  // at K_oom, not above it
  EXPECT_FALSE(ApplyStress(f, p, 700).oom_killed);
  EXPECT_EQ(ApplyStress(f, p, 700).load, 4);
}

TEST(CaseProtocolTest, WindowsAndParsing) {
  CaseProtocol p;
  EXPECT_EQ(p.Windows(), (CaseWindows{240000, 480000, 720000}));
  EXPECT_DOUBLE_EQ(p.TotalSeconds(), 720);
  auto q = ParseCaseProtocol({{"normal_s", 60}, {"emit", {{"logs", false}}}});
  EXPECT_EQ(q.Windows(), (CaseWindows{240000, 300000, 540000}));
  EXPECT_FALSE(q.emit_logs);
  EXPECT_TRUE(q.emit_traces);
  const auto r = ParseCaseProtocol(CaseProtocolToJson(q));
  EXPECT_EQ(r.Windows(), q.Windows());
  EXPECT_FALSE(r.emit_logs);
  EXPECT_THROW(ParseCaseProtocol({{"warmup", 1}}), ConfigError);
  EXPECT_THROW(ParseCaseProtocol({{"fault_s", 0}}), ConfigError);
}

TEST(RunCaseTest, DeterministicPerSeed) {
  const auto t = ReferenceTopology("trainticket50");
  const auto f = Fault("NetworkLoss", FaultCategory::kNetwork,
                       t.graph.edges()[3].Id(),
                       {{"loss_pct", 50.0}, {"correlation_pct", 0.0}, {"direction", "to"}});
  const auto a = RunCase(t, WorkloadProfile{}, ShortProtocol(), f, 17);
  const auto b = RunCase(t, WorkloadProfile{}, ShortProtocol(), f, 17);
  EXPECT_EQ(a.bundle, b.bundle);
  const auto c = RunCase(t, WorkloadProfile{}, ShortProtocol(), f, 18);
  EXPECT_NE(a.bundle.spans, c.bundle.spans);
}

TEST(RunCaseTest, SpanTreesAreWellFormed) {
  const auto t = ReferenceTopology("trainticket50");
  const auto f = Fault("HTTPResponseDelay", FaultCategory::kHttp,
                       t.graph.edges()[0].Id(), {{"delay_ms", 3000.0}});
  const auto out = RunCase(t, WorkloadProfile{}, ShortProtocol(), f, 2);
  std::map<std::string, std::map<std::string, const Span*>> traces;
  for (const auto& s : out.bundle.spans) {
    ASSERT_TRUE(traces[s.trace_id].emplace(s.span_id, &s).second) << s.span_id;
  }
  uint64_t roots = 0;
  for (const auto& [trace, spans] : traces) {
    int trace_roots = 0;
    for (const auto& [id, s] : spans) {
      if (s->IsRoot()) {
        ++trace_roots;
        continue;
      }
      auto parent = spans.find(s->parent_span_id);
      ASSERT_NE(parent, spans.end()) << trace << " " << id;
      EXPECT_GE(s->start_ms, parent->second->start_ms);
      EXPECT_LE(s->EndUs(), parent->second->EndUs());
    }
    EXPECT_EQ(trace_roots, 1) << trace;
    roots += trace_roots;
  }
  EXPECT_EQ(roots, out.meta.arrivals);
  EXPECT_GT(out.meta.arrivals, 0u);
}

TEST(RunCaseTest, FaultFreeRootsSucceed) {
  const auto t = ReferenceTopology("chain3");
  const auto out = RunCase(t, WorkloadProfile{}, ShortProtocol(), std::nullopt, 4);
  for (const auto& s : out.bundle.spans) {
    if (s.IsRoot()) EXPECT_EQ(s.status, SpanStatus::kOk);
  }
  const auto& w = out.bundle.windows;
  EXPECT_EQ(w, ShortProtocol().Windows());
  for (const auto& s : out.bundle.spans) {
    EXPECT_GE(s.start_ms, w.normal_start_ms);
    EXPECT_LT(s.start_ms, w.fault_end_ms);
  }
}

TEST(RunCaseTest, PodKillSilencesPodDuringWindow) {
  const auto t = ReferenceTopology("chain3");
  const auto out = RunCase(t, WorkloadProfile{}, ShortProtocol(),
                           Fault("PodKill", FaultCategory::kResource, "b-0"), 4);
  const auto fw = FaultWindow(out.bundle.windows);
  int normal_b = 0;
  for (const auto& m : out.bundle.metrics) {
    if (m.pod != "b-0") continue;
    EXPECT_FALSE(fw.Contains(m.timestamp_ms));
    ++normal_b;
  }
  for (const auto& s : out.bundle.spans) {
    if (s.pod == "b-0") EXPECT_FALSE(fw.Contains(s.start_ms));
    if (s.IsRoot() && fw.Contains(s.start_ms)) EXPECT_NE(s.status, SpanStatus::kOk);
  }
  for (const auto& l : out.bundle.logs) {
    if (l.pod == "b-0") EXPECT_FALSE(fw.Contains(l.timestamp_ms));
  }
  EXPECT_GT(normal_b, 0);
}

TEST(RunCaseTest, NetworkDelayShiftsRootLatency) {
  const auto t = ReferenceTopology("chain3");
  const auto out = RunCase(
      t, WorkloadProfile{}, ShortProtocol(),
      Fault("NetworkDelay", FaultCategory::kNetwork, "A->B:b_op",
            {{"latency_ms", 500.0}, {"jitter_ms", 0.0}, {"correlation_pct", 0.0},
             {"direction", "to"}}),
      6);
  const double shift = MeanRootMs(out.bundle, FaultWindow(out.bundle.windows)) -
                       MeanRootMs(out.bundle, NormalWindow(out.bundle.windows));
  EXPECT_NEAR(shift, 500, 50);
}

TEST(RunCaseTest, RequestAbortFailsEveryFaultRequest) {
  const auto t = ReferenceTopology("chain3");
  const auto out = RunCase(t, WorkloadProfile{}, ShortProtocol(),
                           Fault("HTTPRequestAbort", FaultCategory::kHttp, "B->C:c_op"), 6);
  const auto fw = FaultWindow(out.bundle.windows);
  for (const auto& s : out.bundle.spans) {
    if (s.IsRoot() && fw.Contains(s.start_ms)) EXPECT_EQ(s.status, SpanStatus::kError);
  }
}

// Fault draws use their own stream, so the pre-fault window is untouched.
TEST(RunCaseTest, FaultLeavesNormalWindowUnchanged) {
  const auto t = ReferenceTopology("chain3");
  const auto base = RunCase(t, WorkloadProfile{}, ShortProtocol(), std::nullopt, 8);
  const auto faulty = RunCase(
      t, WorkloadProfile{}, ShortProtocol(),
      Fault("CPUStress", FaultCategory::kResource, "c-0", {{"load", 2.0}}), 8);
  const auto nw = NormalWindow(base.bundle.windows);
  EXPECT_EQ(QueryWindow(base.bundle, nw, Modality::kTraces).spans,
            QueryWindow(faulty.bundle, nw, Modality::kTraces).spans);
  EXPECT_EQ(QueryWindow(base.bundle, nw, Modality::kMetrics).metrics,
            QueryWindow(faulty.bundle, nw, Modality::kMetrics).metrics);
}

TEST(RunCaseTest, EmitFlagsDropModalities) {
  const auto t = ReferenceTopology("chain3");
  auto p = ShortProtocol();
  p.emit_logs = false;
  p.emit_metrics = false;
  const auto out = RunCase(t, WorkloadProfile{}, p, std::nullopt, 1);
  EXPECT_TRUE(out.bundle.logs.empty());
  EXPECT_TRUE(out.bundle.metrics.empty());
  EXPECT_FALSE(out.bundle.spans.empty());
}

TEST(RunCaseTest, StressRaisesTargetCpu) {
  const auto t = ReferenceTopology("chain3");
  const auto out = RunCase(
      t, WorkloadProfile{}, ShortProtocol(),
      Fault("CPUStress", FaultCategory::kResource, "c-0", {{"load", 2.0}}), 3);
  double normal = 0, fault = 0;
  for (const auto& m : out.bundle.metrics) {
    if (m.pod != "c-0" || m.metric != "cpu_usage") continue;
    if (NormalWindow(out.bundle.windows).Contains(m.timestamp_ms)) normal = std::max(normal, m.value);
    if (FaultWindow(out.bundle.windows).Contains(m.timestamp_ms)) fault = std::max(fault, m.value);
  }
  EXPECT_GT(fault, normal + 1.5);
}

}  // namespace
}  // namespace rcabench
