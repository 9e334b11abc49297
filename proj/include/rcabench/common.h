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

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rcabench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (parse errors, dangling
/// references, cyclic call graphs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Stable 64-bit string hash (FNV-1a). std::hash is not stable across
// standard library implementations and seeds are persisted.
uint64_t StableHash(std::string_view text);

uint64_t SplitMix64(uint64_t x);

// Derives an independent stream seed from a parent seed and a tag.
uint64_t DeriveSeed(uint64_t seed, std::string_view tag);
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

// Seeded generator with distribution helpers whose output depends only on
// the engine, not on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform on [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer on [0, n); n > 0.
  uint64_t UniformInt(uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }
  double Exponential(double rate);
  double Normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Milliseconds rendered as decimal seconds with millisecond precision
// ("12.345", "-0.500").
std::string FormatMillisAsSeconds(int64_t millis);
// Microseconds rendered as decimal milliseconds ("1.234").
std::string FormatMicrosAsMillis(int64_t micros);

}  // namespace rcabench
