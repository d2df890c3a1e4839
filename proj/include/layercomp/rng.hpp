// Copyright 2026 The LayerComp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace layercomp {

/// Portable random stream. Built on std::mt19937_64, whose output sequence
/// is fixed by the standard, with hand-written uniform and normal transforms
/// so that the same seed gives the same numbers with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Box-Muller transform (polar-free form). Caches
  /// the second variate of each pair.
  double normal();

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Expands an integer seed into a standard-normal noise vector. This is the
/// documented mapping used for every z in composition sessions:
///   mt19937_64(seed) -> Box-Muller pairs -> float.
std::vector<float> noise_from_seed(std::uint64_t seed, int dim);

/// Derives an independent sub-seed (SplitMix64 finalizer of seed ^ salt).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

/// 64-bit FNV-1a, used for config hashes and output fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace layercomp
