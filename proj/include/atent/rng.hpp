// Copyright 2026 The ATENT Authors
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

#ifndef ATENT_RNG_HPP_
#define ATENT_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace atent {

// Seeded random source. Distributions are implemented here rather than
// through <random> distribution classes, whose output is
// implementation-defined, so a seed means the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream keyed by (master, path...), e.g.
  // Rng::stream(seed, {kAttackStream, batch, restart}).
  static Rng stream(std::uint64_t master,
                    std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal (Box-Muller, pairs cached).
  double normal();
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  void fill_normal(std::span<double> out, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream tags for Rng::stream; keep values stable, they determine results.
enum StreamTag : std::uint64_t {
  kShuffleStream = 1,
  kSamplerStream = 2,
  kAttackStream = 3,
  kInitStream = 4,
  kSmoothingStream = 5,
  kSplitStream = 6,
  kDataStream = 7,
  kEvalStream = 8,
};

}  // namespace atent

#endif  // ATENT_RNG_HPP_
