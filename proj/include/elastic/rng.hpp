// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "elastic/grid.hpp"

namespace elastic {

/// splitmix64 finaliser; used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of a name.
std::uint64_t hash_name(std::string_view name);

/// Seeded generator for one named purpose.
///
/// All randomness in a run comes from `RandomStream(seed, "purpose")`. Each
/// purpose gets its own mt19937_64 seeded from mix64(seed ^ hash(purpose)), so
/// drawing more numbers from one stream never shifts the values of another.
/// Normals use Box-Muller on 53-bit uniforms rather than
/// std::normal_distribution, whose output differs between standard libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view purpose);

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();
  Grid normal_grid(int height, int width, int channels);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace elastic
