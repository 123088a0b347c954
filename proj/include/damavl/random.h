// Copyright 2026 The DAMAVL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DAMAVL_RANDOM_H_
#define DAMAVL_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace damavl {

// A seeded 64-bit stream. Sampling helpers are written against the raw engine
// output so results do not depend on the standard library's distributions.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform double in [0, 1) with 53 bits of precision.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi].
  int64_t UniformInt(int64_t lo, int64_t hi);

  // Index drawn from an unnormalized non-negative weight vector.
  int Categorical(std::span<const double> weights);

  bool operator==(const RandomStream& other) const {
    return engine_ == other.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

// Deterministic seed for a named substream of a master seed. Distinct purpose
// strings give statistically independent streams.
uint64_t DeriveSeed(uint64_t master_seed, std::string_view purpose);

inline RandomStream DeriveStream(uint64_t master_seed,
                                 std::string_view purpose) {
  return RandomStream(DeriveSeed(master_seed, purpose));
}

}  // namespace damavl

#endif  // DAMAVL_RANDOM_H_
