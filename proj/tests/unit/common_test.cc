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

#include "rcabench/common.h"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace rcabench {
namespace {

// Published FNV-1a 64 and SplitMix64 reference vectors.
TEST(StableHashTest, MatchesFnv1aVectors) {
  EXPECT_EQ(StableHash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(StableHash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(StableHash("foobar"), 0x85944171f73967e8ULL);
}

TEST(SplitMix64Test, FirstOutputFromZeroState) {
  EXPECT_EQ(SplitMix64(0), 0xe220a8397b1dcdafULL);
}

TEST(DeriveSeedTest, DeterministicAndTagSensitive) {
  EXPECT_EQ(DeriveSeed(7, "workload"), DeriveSeed(7, "workload"));
  EXPECT_NE(DeriveSeed(7, "workload"), DeriveSeed(7, "fault"));
  EXPECT_NE(DeriveSeed(7, "workload"), DeriveSeed(8, "workload"));
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 1000; ++i) seen.insert(DeriveSeed(1, i));
  EXPECT_EQ(seen.size(), 1000u);
}

// The standard requires the 10000th draw of a default mt19937_64.
TEST(RngTest, EngineIsMt19937_64) {
  Rng rng(5489);
  uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.NextU64();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(RngTest, UniformIntCoversRangeWithoutBias) {
  Rng rng(3);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[rng.UniformInt(6)];
  for (int c : counts) EXPECT_NEAR(c, n / 6.0, 5 * std::sqrt(n * (1 / 6.0) * (5 / 6.0)));
}

TEST(RngTest, NormalMoments) {
  Rng rng(11);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.Normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(RngTest, ExponentialMean) {
  Rng rng(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += rng.Exponential(4.0);
  EXPECT_NEAR(sum / 100000, 0.25, 0.005);
}

TEST(FormatTest, FixedThreeDecimals) {
  EXPECT_EQ(FormatMillisAsSeconds(0), "0.000");
  EXPECT_EQ(FormatMillisAsSeconds(1234), "1.234");
  EXPECT_EQ(FormatMillisAsSeconds(480005), "480.005");
  EXPECT_EQ(FormatMillisAsSeconds(-1500), "-1.500");
  EXPECT_EQ(FormatMicrosAsMillis(60250), "60.250");
}

}  // namespace
}  // namespace rcabench
