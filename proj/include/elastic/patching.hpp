// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "elastic/grid.hpp"

namespace elastic {

/// One implicit-context tile. `window` is the native-size denoiser input;
/// only `inner` is written back.
struct Tile {
  Rect inner;            // target coordinates
  Rect window;           // target coordinates, native size
  Rect inner_in_window;  // window coordinates
};

struct PatchLayout {
  int target_h = 0;
  int target_w = 0;
  int native_h = 0;
  int native_w = 0;
  int tiles_y = 0;
  int tiles_x = 0;
  std::vector<Tile> tiles;  // row-major over (tiles_y, tiles_x)
};

/// Number of inner tiles along one axis: 2 * ceil(target / native) - 1, or 1
/// when target == native.
int implicit_tile_count(int target, int native);

/// Splits `length` into `parts` integer sizes differing by at most one,
/// larger parts first.
std::vector<int> split_even(int length, int parts);

/// Inner tiles partition the target; each window is native-size, centred on
/// its inner tile and clamped inside the target.
PatchLayout plan_implicit(int target_h, int target_w, int native_h, int native_w);

/// Native-size windows stepping by `stride`, last window flush with the edge.
/// Per axis count is ceil((target - native) / stride) + 1.
std::vector<Rect> plan_explicit(int target_h, int target_w, int native_h, int native_w, int stride);

/// Abutting native-size windows (stride = native size on each axis); the
/// last row and column are flush with the edge.
std::vector<Rect> plan_no_overlap(int target_h, int target_w, int native_h, int native_w);

/// How the unconditional score of an oversized grid is assembled.
struct FusionStrategy {
  enum class Kind { no_overlap, explicit_overlap, implicit_context };

  Kind kind = Kind::implicit_context;
  int stride = 0;  // explicit_overlap only

  static FusionStrategy none() { return {Kind::no_overlap, 0}; }
  static FusionStrategy explicit_overlap(int stride) { return {Kind::explicit_overlap, stride}; }
  static FusionStrategy implicit() { return {Kind::implicit_context, 0}; }

  /// "none", "explicit:STRIDE" or "implicit".
  std::string name() const;
  static FusionStrategy parse(const std::string& text);
  bool operator==(const FusionStrategy&) const = default;
};

/// Native-size score oracle: takes a native-size window and the step.
using NativeScore = std::function<Grid(const Grid& window, int t)>;

/// Evaluates `denoise` on every window and writes back only the inner rects.
/// Tiles may run concurrently; the result does not depend on scheduling.
Grid score_implicit(const Grid& x, int t, const PatchLayout& layout, const NativeScore& denoise,
                    bool parallel = true);

/// Averages per-window scores where windows overlap. Window results are
/// accumulated in list order so the output is independent of threading.
Grid score_explicit(const Grid& x, int t, const std::vector<Rect>& windows, const NativeScore& denoise,
                    bool parallel = true);

/// Seam positions along each axis: a cut at c separates pixel c-1 from c.
struct SeamLines {
  std::vector<int> rows;
  std::vector<int> cols;
};

SeamLines seams_of(const PatchLayout& layout);
SeamLines seams_of(const std::vector<Rect>& windows, int height, int width);

/// Mean |first difference| across seam lines minus mean |first difference|
/// everywhere else. Zero when there are no seams. The value is signed: a
/// grid that is smoother across seams than elsewhere scores below zero.
double seam_discontinuity(const Grid& x, const SeamLines& seams);
double seam_discontinuity(const Grid& x, const PatchLayout& layout);

}  // namespace elastic
