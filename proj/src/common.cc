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
#include <cstdlib>

#include <fmt/format.h>

namespace rcabench {

uint64_t StableHash(std::string_view text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t DeriveSeed(uint64_t seed, std::string_view tag) {
  return SplitMix64(seed ^ SplitMix64(StableHash(tag)));
}

uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  return SplitMix64(seed ^ SplitMix64(index + 0x5851f42d4c957f2dULL));
}

uint64_t Rng::UniformInt(uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Exponential(double rate) { return -std::log1p(-Uniform()) / rate; }

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::string FormatMillisAsSeconds(int64_t millis) {
  const bool negative = millis < 0;
  const uint64_t magnitude = negative ? -static_cast<uint64_t>(millis)
                                      : static_cast<uint64_t>(millis);
  return fmt::format("{}{}.{:03d}", negative ? "-" : "", magnitude / 1000,
                     static_cast<int>(magnitude % 1000));
}

std::string FormatMicrosAsMillis(int64_t micros) {
  return FormatMillisAsSeconds(micros);
}

}  // namespace rcabench
