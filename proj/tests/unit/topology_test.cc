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

#include "rcabench/topology.h"

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

TEST(TopologyTest, Chain3Shape) {
  const Topology t = ReferenceTopology("chain3");
  ASSERT_EQ(t.graph.services().size(), 3u);
  ASSERT_EQ(t.graph.edges().size(), 2u);
  EXPECT_EQ(t.graph.service("C").pods.front().id, "c-0");
  EXPECT_EQ(t.graph.service("C").pods.front().containers.front(), "c-0-main");
  EXPECT_EQ(t.graph.edges()[1].Id(), "B->C:c_op");
  EXPECT_EQ(t.graph.OutgoingCalls("B", "c_op").size(), 0u);
  EXPECT_EQ(t.graph.OutgoingCalls("B", "b_op").size(), 1u);
  ASSERT_TRUE(t.graph.FindContainer("b-0-main"));
  EXPECT_EQ(t.graph.FindContainer("b-0-main")->service, 1u);
  EXPECT_FALSE(t.graph.FindPod("d-0"));
}

TEST(TopologyTest, SerializeRoundTrip) {
  for (const char* name : {"chain3", "trainticket50"}) {
    const Topology t = ReferenceTopology(name);
    EXPECT_EQ(LoadTopology(std::string_view(SerializeTopology(t))), t) << name;
  }
}

TEST(TopologyTest, TrainTicketDesignCounts) {
  const Topology t = ReferenceTopology("trainticket50");
  EXPECT_EQ(t.graph.services().size(), 50u);
  EXPECT_EQ(t.graph.edges().size(), 130u);
  EXPECT_EQ(t.TopLevelWorkflows().size(), 8u);
}

// Three states with 6, 3 and 2 alternatives.
TEST(PathTest, BookingHasThirtySixPaths) {
  const Topology t = ReferenceTopology("trainticket50");
  const auto& booking = t.workflow("booking");
  EXPECT_EQ(CountPaths(t, booking), 36u);
  const auto paths = EnumeratePaths(t, booking);
  ASSERT_EQ(paths.size(), 36u);
  std::set<std::vector<uint32_t>> distinct;
  for (const auto& p : paths) {
    distinct.insert(p.choices);
    EXPECT_EQ(DecodePath(t, booking, p.id), p);
    EXPECT_EQ(EncodePath(t, booking, p.choices), p.id);
  }
  EXPECT_EQ(distinct.size(), 36u);
}

TEST(PathTest, CountMatchesEnumerationForEveryWorkflow) {
  const Topology t = ReferenceTopology("trainticket50");
  for (const auto* wf : t.TopLevelWorkflows()) {
    const uint64_t n = CountPaths(t, *wf);
    if (n > 5000) continue;
    EXPECT_EQ(EnumeratePaths(t, *wf).size(), n) << wf->name;
  }
}

TEST(PathTest, DecodeRejectsOutOfRange) {
  const Topology t = ReferenceTopology("chain3");
  const auto& wf = t.workflow("chain");
  EXPECT_EQ(CountPaths(t, wf), 1u);
  EXPECT_THROW(DecodePath(t, wf, 1), Error);
  const auto calls = PathCalls(t, wf, DecodePath(t, wf, 0));
  ASSERT_EQ(calls.size(), 1u);
  EXPECT_EQ(calls[0].service, "B");
}

TEST(LoadTopologyTest, RejectsMalformedDocuments) {
  EXPECT_THROW(LoadTopology(std::string_view("{")), ConfigError);
  EXPECT_THROW(LoadTopology(std::string_view(R"({"services":[{"name":"A"}],
      "edges":[{"caller":"A","callee":"Z","operation":"x"}],
      "workflows":[],"entry_points":["A"]})")),
               ConfigError);
  EXPECT_THROW(LoadTopology(std::string_view(R"({"services":[{"name":"A"},{"name":"A"}],
      "edges":[],"workflows":[],"entry_points":["A"]})")),
               ConfigError);
}

TEST(LoadTopologyTest, RejectsCallCycle) {
  const char* doc = R"({"services":[{"name":"A"},{"name":"B"}],
    "edges":[{"caller":"A","callee":"B","operation":"b","trigger":"a"},
             {"caller":"B","callee":"A","operation":"a","trigger":"b"}],
    "workflows":[{"name":"w","entry":"A","root_operation":"a",
      "states":[{"name":"s","transitions":[{"name":"t","service":"B","operation":"b"}]}]}],
    "entry_points":["A"]})";
  EXPECT_THROW(LoadTopology(std::string_view(doc)), ConfigError);
}

TEST(LoadTopologyTest, UnknownReferenceName) {
  EXPECT_THROW(ReferenceTopology("nope"), ConfigError);
}

}  // namespace
}  // namespace rcabench
