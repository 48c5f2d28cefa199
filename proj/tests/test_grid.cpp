// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "elastic/error.hpp"
#include "elastic/grid.hpp"
#include "elastic/rng.hpp"
#include "oracles.hpp"

using namespace elastic;

namespace {

Grid iota(int h, int w, int c = 1, double start = 1.0) {
  Grid g(h, w, c);
  double v = start;
  for (double& x : g.values()) x = v++;
  return g;
}

Grid random_grid(int h, int w, int c, std::uint64_t seed) {
  RandomStream rng(seed, "test");
  return rng.normal_grid(h, w, c);
}

}  // namespace

TEST_CASE("grid construction rejects bad shapes") {
  CHECK_THROWS_AS(Grid(0, 3, 1), Error);
  CHECK_THROWS_AS(Grid(2, 2, 1, std::vector<double>(3)), Error);
  try {
    Grid(2, 2, 1, std::vector<double>(5));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::shape_mismatch);
  }
  Grid g(2, 3, 2, 1.5);
  CHECK(g.size() == 12);
  CHECK(g.at(1, 2, 1) == 1.5);
  CHECK(g.shape_string() == "2x3x2");
}

TEST_CASE("downsample_nearest picks floor-mapped pixels") {
  const Grid src = iota(4, 4);
  const Grid out = downsample_nearest(src, 2, 2);
  CHECK(out == Grid(2, 2, 1, {1, 3, 9, 11}));
  CHECK(downsample_nearest(src, 4, 4) == src);
  CHECK(downsample_nearest(Grid(6, 6, 1, 0.25), 3, 3) == Grid(3, 3, 1, 0.25));
  CHECK_THROWS_AS(downsample_nearest(src, 5, 2), Error);
  CHECK_THROWS_AS(downsample_nearest(src, 0, 2), Error);
}

TEST_CASE("upsample_nearest replicates blocks") {
  const Grid src(2, 2, 1, {1, 2, 3, 4});
  const Grid out = upsample_nearest(src, 4, 4);
  CHECK(out == Grid(4, 4, 1, {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
  CHECK(upsample_nearest(src, 2, 2) == src);
  CHECK_THROWS_AS(upsample_nearest(src, 1, 4), Error);
}

TEST_CASE("integer-factor upsample matches block replication") {
  for (int f : {2, 3}) {
    const Grid src = random_grid(5, 4, 2, 11 + f);
    CHECK(upsample_nearest(src, 5 * f, 4 * f) == oracle::replicate(src, f, f));
    CHECK(downsample_nearest(upsample_nearest(src, 5 * f, 4 * f), 5, 4) == src);
  }
  const Grid src = random_grid(3, 7, 1, 3);
  CHECK(upsample_nearest(src, 6, 7) == oracle::replicate(src, 2, 1));
}

TEST_CASE("resize values are drawn from the source") {
  const Grid src = random_grid(7, 5, 1, 99);
  const std::set<double> pool(src.storage().begin(), src.storage().end());
  for (auto [h, w] : {std::pair{3, 2}, std::pair{13, 11}, std::pair{4, 9}, std::pair{7, 5}}) {
    const Grid out = resize_nearest(src, h, w);
    for (double v : out.values()) CHECK(pool.count(v) == 1);
  }
}

TEST_CASE("pad_center and crop") {
  const Grid ones(2, 2, 1, 1.0);
  const PadResult p = pad_center(ones, 4, 4, Grid(4, 4, 1, 0.0));
  CHECK(p.placement == Rect{1, 1, 2, 2});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(p.grid.at(y, x) == (p.placement.contains(y, x) ? 1.0 : 0.0));

  const PadResult same = pad_center(ones, 2, 2, Grid(2, 2, 1, 7.0));
  CHECK(same.grid == ones);
  CHECK(same.placement == Rect{0, 0, 2, 2});

  const PadResult odd = pad_center(Grid(3, 3, 1, 1.0), 4, 4, Grid(4, 4, 1, 0.0));
  CHECK(odd.placement == Rect{0, 0, 3, 3});

  CHECK_THROWS_AS(pad_center(ones, 1, 4, Grid(1, 4, 1)), Error);
  CHECK_THROWS_AS(pad_center(ones, 4, 4, Grid(4, 3, 1)), Error);
}

TEST_CASE("pad then crop is the identity") {
  for (int seed = 0; seed < 8; ++seed) {
    RandomStream rng(seed, "shape");
    const int h = 1 + int(rng.below(6)), w = 1 + int(rng.below(6));
    const int oh = h + int(rng.below(5)), ow = w + int(rng.below(5));
    const Grid src = random_grid(h, w, 2, seed);
    const PadResult p = pad_center(src, oh, ow, random_grid(oh, ow, 2, seed + 100));
    CHECK(crop(p.grid, p.placement) == src);
  }
}

TEST_CASE("crop bounds") {
  const Grid src = iota(3, 4, 2);
  CHECK(crop(src, {0, 0, 3, 4}) == src);
  const Grid one = crop(src, {0, 0, 1, 1});
  CHECK(one == Grid(1, 1, 2, {1, 2}));
  try {
    crop(src, {2, 0, 2, 1});
    FAIL("expected out_of_range");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::out_of_range);
  }
  Grid dst(3, 4, 2, 0.0);
  paste(dst, one, {2, 3, 1, 1});
  CHECK(dst.at(2, 3, 1) == 2.0);
  CHECK_THROWS_AS(paste(dst, one, {3, 3, 1, 1}), Error);
}

TEST_CASE("blend_masked") {
  const Grid keep = random_grid(4, 5, 2, 1), fresh = random_grid(4, 5, 2, 2);
  BinaryMask none(4, 5), all(4, 5), some(4, 5);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      all.set(y, x);
      if ((y * 5 + x) % 3 == 0) some.set(y, x);
    }
  CHECK(blend_masked(keep, fresh, none) == keep);
  CHECK(blend_masked(keep, fresh, all) == fresh);
  CHECK(blend_masked(keep, keep, some) == keep);
  const Grid mixed = blend_masked(keep, fresh, some);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x)
      for (int c = 0; c < 2; ++c) CHECK(mixed.at(y, x, c) == (some.test(y, x) ? fresh : keep).at(y, x, c));
  CHECK_THROWS_AS(blend_masked(keep, fresh, BinaryMask(4, 4)), Error);
}

TEST_CASE("binary mask bookkeeping") {
  BinaryMask a(3, 3), b(3, 3);
  a.set(0, 0);
  a.set(2, 1);
  b.set(1, 1);
  CHECK(a.count() == 2);
  CHECK_FALSE(a.intersects(b));
  b.set(2, 1);
  CHECK(a.intersects(b));
  a.set(2, 1, false);
  CHECK(a.count() == 1);
}

TEST_CASE("frobenius distance") {
  const Grid a = random_grid(3, 3, 1, 5);
  CHECK(frobenius_distance(a, a) == 0.0);
  CHECK(frobenius_distance(Grid(1, 1, 1, 3.0), Grid(1, 1, 1, 0.0)) == 3.0);
  CHECK(frobenius_distance(Grid(1, 2, 1, {3, 4}), Grid(1, 2, 1, 0.0)) == 5.0);
  CHECK(rms_distance(Grid(1, 2, 1, {3, 4}), Grid(1, 2, 1, 0.0)) == doctest::Approx(5.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(frobenius_distance(a, Grid(3, 3, 2)), Error);
}

TEST_CASE("arithmetic") {
  const Grid a(1, 3, 1, {1, 2, 3}), b(1, 3, 1, {0.5, -1, 4});
  CHECK(a + b == Grid(1, 3, 1, {1.5, 1, 7}));
  CHECK(a - b == Grid(1, 3, 1, {0.5, 3, -1}));
  CHECK(2.0 * a == Grid(1, 3, 1, {2, 4, 6}));
  CHECK(add_scaled(a, 2.0, b) == Grid(1, 3, 1, {2, 0, 11}));
  CHECK_THROWS_AS(a + Grid(3, 1, 1), Error);
}
