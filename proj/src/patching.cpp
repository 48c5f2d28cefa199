// SPDX-License-Identifier: Apache-2.0
#include "elastic/patching.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "elastic/error.hpp"
#include "parallel.hpp"

namespace elastic {

int implicit_tile_count(int target, int native) {
  if (target < native) fail(Errc::invalid_argument, "target smaller than native size");
  if (target == native) return 1;
  const int ratio = (target + native - 1) / native;
  return 2 * ratio - 1;
}

std::vector<int> split_even(int length, int parts) {
  if (parts < 1 || parts > length) fail(Errc::invalid_argument, "cannot split axis into that many parts");
  std::vector<int> sizes(parts, length / parts);
  for (int i = 0; i < length % parts; ++i) ++sizes[i];
  return sizes;
}

namespace {

struct AxisTile {
  int inner0, inner_len, window0;
};

std::vector<AxisTile> plan_axis(int target, int native) {
  const auto sizes = split_even(target, implicit_tile_count(target, native));
  std::vector<AxisTile> out;
  int pos = 0;
  for (int len : sizes) {
    const int twice = 2 * pos + len - native;  // 2 * (inner centre - native / 2)
    const int centred = twice >= 0 ? twice / 2 : -((1 - twice) / 2);
    out.push_back({pos, len, std::clamp(centred, 0, target - native)});
    pos += len;
  }
  return out;
}

std::vector<int> explicit_axis(int target, int native, int stride) {
  std::vector<int> starts;
  const int count = (target - native + stride - 1) / stride + 1;
  for (int k = 0; k < count; ++k) starts.push_back(std::min(k * stride, target - native));
  return starts;
}

void check_dims(int target_h, int target_w, int native_h, int native_w) {
  if (native_h < 1 || native_w < 1) fail(Errc::invalid_argument, "native size must be positive");
  if (target_h < native_h || target_w < native_w) {
    fail(Errc::invalid_argument, "target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                                     " smaller than native " + std::to_string(native_h) + "x" +
                                     std::to_string(native_w));
  }
}

}  // namespace

PatchLayout plan_implicit(int target_h, int target_w, int native_h, int native_w) {
  check_dims(target_h, target_w, native_h, native_w);
  const auto rows = plan_axis(target_h, native_h);
  const auto cols = plan_axis(target_w, native_w);
  PatchLayout layout{target_h, target_w, native_h, native_w, int(rows.size()), int(cols.size()), {}};
  for (const auto& r : rows) {
    for (const auto& c : cols) {
      Tile tile;
      tile.inner = {r.inner0, c.inner0, r.inner_len, c.inner_len};
      tile.window = {r.window0, c.window0, native_h, native_w};
      tile.inner_in_window = {r.inner0 - r.window0, c.inner0 - c.window0, r.inner_len, c.inner_len};
      layout.tiles.push_back(tile);
    }
  }
  return layout;
}

std::vector<Rect> plan_explicit(int target_h, int target_w, int native_h, int native_w, int stride) {
  check_dims(target_h, target_w, native_h, native_w);
  if (stride < 1 || stride > std::min(native_h, native_w)) {
    fail(Errc::invalid_argument, "explicit stride " + std::to_string(stride) + " outside [1, native size]");
  }
  std::vector<Rect> windows;
  for (int y : explicit_axis(target_h, native_h, stride)) {
    for (int x : explicit_axis(target_w, native_w, stride)) windows.push_back({y, x, native_h, native_w});
  }
  return windows;
}

std::vector<Rect> plan_no_overlap(int target_h, int target_w, int native_h, int native_w) {
  check_dims(target_h, target_w, native_h, native_w);
  std::vector<Rect> windows;
  for (int y : explicit_axis(target_h, native_h, native_h)) {
    for (int x : explicit_axis(target_w, native_w, native_w)) windows.push_back({y, x, native_h, native_w});
  }
  return windows;
}

std::string FusionStrategy::name() const {
  switch (kind) {
    case Kind::no_overlap:
      return "none";
    case Kind::explicit_overlap:
      return "explicit:" + std::to_string(stride);
    case Kind::implicit_context:
      return "implicit";
  }
  return "?";
}

FusionStrategy FusionStrategy::parse(const std::string& text) {
  if (text == "none") return none();
  if (text == "implicit") return implicit();
  const std::string prefix = "explicit:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string digits = text.substr(prefix.size());
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit) && digits.size() < 9) {
      const int stride = std::stoi(digits);
      if (stride >= 1) return explicit_overlap(stride);
    }
  }
  fail(Errc::invalid_argument, "unknown fusion strategy '" + text + "' (expected implicit, none or explicit:STRIDE)");
}

namespace {

Grid call_native(const NativeScore& denoise, const Grid& window, int t) {
  Grid out = denoise(window, t);
  if (!out.same_shape(window)) {
    fail(Errc::shape_mismatch, "score oracle returned " + out.shape_string() + " for window " + window.shape_string());
  }
  return out;
}

}  // namespace

Grid score_implicit(const Grid& x, int t, const PatchLayout& layout, const NativeScore& denoise, bool parallel) {
  if (x.height() != layout.target_h || x.width() != layout.target_w) {
    fail(Errc::shape_mismatch, "grid " + x.shape_string() + " does not match patch layout");
  }
  Grid out(x.height(), x.width(), x.channels());
  // Inner rects are disjoint, so tiles can paste concurrently.
  detail::parallel_for(
      layout.tiles.size(),
      [&](std::size_t i) {
        const Tile& tile = layout.tiles[i];
        const Grid score = call_native(denoise, crop(x, tile.window), t);
        paste(out, crop(score, tile.inner_in_window), tile.inner);
      },
      parallel);
  return out;
}

Grid score_explicit(const Grid& x, int t, const std::vector<Rect>& windows, const NativeScore& denoise,
                    bool parallel) {
  std::vector<Grid> scores(windows.size());
  detail::parallel_for(
      windows.size(), [&](std::size_t i) { scores[i] = call_native(denoise, crop(x, windows[i]), t); }, parallel);

  Grid sum(x.height(), x.width(), x.channels());
  std::vector<int> hits(std::size_t(x.height()) * x.width(), 0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Rect& w = windows[i];
    for (int y = 0; y < w.h; ++y) {
      for (int xx = 0; xx < w.w; ++xx) {
        ++hits[std::size_t(w.y0 + y) * x.width() + w.x0 + xx];
        for (int c = 0; c < x.channels(); ++c) sum.at(w.y0 + y, w.x0 + xx, c) += scores[i].at(y, xx, c);
      }
    }
  }
  for (int y = 0; y < x.height(); ++y) {
    for (int xx = 0; xx < x.width(); ++xx) {
      const int n = hits[std::size_t(y) * x.width() + xx];
      if (n == 0) fail(Errc::invalid_argument, "pixel (" + std::to_string(y) + "," + std::to_string(xx) +
                                                   ") not covered by any window");
      for (int c = 0; c < x.channels(); ++c) sum.at(y, xx, c) /= n;
    }
  }
  return sum;
}

SeamLines seams_of(const PatchLayout& layout) {
  std::set<int> rows, cols;
  for (const Tile& tile : layout.tiles) {
    if (tile.inner.y0 > 0) rows.insert(tile.inner.y0);
    if (tile.inner.x0 > 0) cols.insert(tile.inner.x0);
  }
  return {{rows.begin(), rows.end()}, {cols.begin(), cols.end()}};
}

SeamLines seams_of(const std::vector<Rect>& windows, int height, int width) {
  std::set<int> rows, cols;
  for (const Rect& w : windows) {
    if (w.y0 > 0) rows.insert(w.y0);
    if (w.y1() < height) rows.insert(w.y1());
    if (w.x0 > 0) cols.insert(w.x0);
    if (w.x1() < width) cols.insert(w.x1());
  }
  return {{rows.begin(), rows.end()}, {cols.begin(), cols.end()}};
}

double seam_discontinuity(const Grid& x, const SeamLines& seams) {
  std::vector<char> row_cut(x.height() + 1, 0), col_cut(x.width() + 1, 0);
  for (int r : seams.rows) {
    if (r > 0 && r < x.height()) row_cut[r] = 1;
  }
  for (int c : seams.cols) {
    if (c > 0 && c < x.width()) col_cut[c] = 1;
  }
  double seam_sum = 0.0, rest_sum = 0.0;
  long seam_n = 0, rest_n = 0;
  for (int y = 0; y < x.height(); ++y) {
    for (int xx = 0; xx < x.width(); ++xx) {
      for (int c = 0; c < x.channels(); ++c) {
        if (xx + 1 < x.width()) {
          const double d = std::abs(x.at(y, xx + 1, c) - x.at(y, xx, c));
          if (col_cut[xx + 1]) {
            seam_sum += d;
            ++seam_n;
          } else {
            rest_sum += d;
            ++rest_n;
          }
        }
        if (y + 1 < x.height()) {
          const double d = std::abs(x.at(y + 1, xx, c) - x.at(y, xx, c));
          if (row_cut[y + 1]) {
            seam_sum += d;
            ++seam_n;
          } else {
            rest_sum += d;
            ++rest_n;
          }
        }
      }
    }
  }
  if (seam_n == 0) return 0.0;
  const double rest_mean = rest_n > 0 ? rest_sum / double(rest_n) : 0.0;
  return seam_sum / double(seam_n) - rest_mean;
}

double seam_discontinuity(const Grid& x, const PatchLayout& layout) {
  if (x.height() != layout.target_h || x.width() != layout.target_w) {
    fail(Errc::shape_mismatch, "grid " + x.shape_string() + " does not match patch layout");
  }
  return seam_discontinuity(x, seams_of(layout));
}

}  // namespace elastic
