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

#include "rcabench/groundtruth.h"

#include <unistd.h>

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "rcabench/common.h"

namespace rcabench {
namespace {

using G = Granularity;

FaultSpec Spec(std::string type, FaultCategory category, std::string target) {
  FaultSpec f;
  f.case_id = "case-0001";
  f.type = std::move(type);
  f.category = category;
  f.target = std::move(target);
  return f;
}

std::vector<LabelElement> Path(const GroundTruthLabel& l) { return l.path; }

TEST(DeriveLabelTest, ResourceFaults) {
  const auto g = ReferenceTopology("chain3").graph;
  EXPECT_EQ(Path(DeriveLabel(Spec("PodKill", FaultCategory::kResource, "b-0"), g)),
            (std::vector<LabelElement>{{G::kService, "B"}, {G::kPod, "b-0"}}));
  EXPECT_EQ(Path(DeriveLabel(Spec("CPUStress", FaultCategory::kResource, "c-0"), g)),
            (std::vector<LabelElement>{{G::kService, "C"},
                                       {G::kPod, "c-0"},
                                       {G::kContainer, "c-0-main"},
                                       {G::kMetric, "cpu_usage"}}));
  EXPECT_EQ(DeriveLabel(Spec("MemoryStress", FaultCategory::kResource, "a-0"), g)
                .path.back().id,
            "memory_usage");
  EXPECT_EQ(Path(DeriveLabel(Spec("ContainerKill", FaultCategory::kResource, "a-0-main"), g)),
            (std::vector<LabelElement>{{G::kService, "A"},
                                       {G::kPod, "a-0"},
                                       {G::kContainer, "a-0-main"}}));
}

TEST(DeriveLabelTest, EdgeFaultsBlameCalleeByDefault) {
  const auto g = ReferenceTopology("chain3").graph;
  const auto s = Spec("HTTPResponseReplaceBody", FaultCategory::kHttp, "B->C:c_op");
  EXPECT_EQ(DeriveLabel(s, g).service(), "C");
  EXPECT_EQ(DeriveLabel(s, g, {.caller_side_edges = true}).service(), "B");
  EXPECT_EQ(DeriveLabel(Spec("NetworkDelay", FaultCategory::kNetwork, "A->B:b_op"), g)
                .path.size(),
            1u);
  EXPECT_THROW(DeriveLabel(Spec("NetworkDelay", FaultCategory::kNetwork, "A->C:x"), g),
               ConfigError);
}

TEST(DeriveLabelTest, CodeDnsTime) {
  const auto g = ReferenceTopology("chain3").graph;
  EXPECT_EQ(Path(DeriveLabel(Spec("JVMException", FaultCategory::kCode, "C:c_op"), g)),
            (std::vector<LabelElement>{{G::kService, "C"},
                                       {G::kPod, "c-0"},
                                       {G::kContainer, "c-0-main"},
                                       {G::kFunction, "c_op"}}));
  EXPECT_EQ(Path(DeriveLabel(Spec("DNSError", FaultCategory::kDns, "B"), g)),
            (std::vector<LabelElement>{{G::kService, "B"}}));
  EXPECT_EQ(DeriveLabel(Spec("TimeSkew", FaultCategory::kTime, "a-0"), g).path.size(), 2u);
}

TEST(ExpandAncestorsTest, FinerImpliesCoarser) {
  const auto g = ReferenceTopology("chain3").graph;
  const auto l = DeriveLabel(Spec("CPUStress", FaultCategory::kResource, "c-0"), g);
  const auto all = ExpandAncestors(l);
  EXPECT_EQ(all.size(), 4u);
  EXPECT_TRUE(all.count({G::kService, "C"}));
  EXPECT_TRUE(all.count({G::kPod, "c-0"}));
  EXPECT_FALSE(all.count({G::kService, "B"}));
}

TEST(LabelIoTest, RoundTrip) {
  const auto g = ReferenceTopology("chain3").graph;
  const auto l = DeriveLabel(Spec("JVMReturn", FaultCategory::kCode, "B:b_op"), g);
  EXPECT_EQ(LabelFromJson(LabelToJson(l)), l);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rcabench_label_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  WriteLabel(l, dir.string());
  EXPECT_EQ(ReadLabel(dir.string()), l);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(ReadLabel(dir.string()), StorageError);
  EXPECT_THROW(ParseGranularity("galaxy"), StorageError);
  EXPECT_EQ(ParseGranularity(GranularityName(G::kFunction)), G::kFunction);
}

}  // namespace
}  // namespace rcabench
