// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace elastic {

/// Axis-aligned window inside a grid, in pixels.
struct Rect {
  int y0 = 0;
  int x0 = 0;
  int h = 0;
  int w = 0;

  int y1() const { return y0 + h; }
  int x1() const { return x0 + w; }
  bool contains(int y, int x) const { return y >= y0 && y < y1() && x >= x0 && x < x1(); }
  bool operator==(const Rect&) const = default;
};

std::string to_string(const Rect& r);

/// Dense height x width x channels array of doubles, row-major (y, x, c).
///
/// Every latent, noise prediction and score in the sampler is a Grid. Grids
/// are plain values: copying one copies its storage.
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels, double fill = 0.0);
  Grid(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  double* ptr(int y, int x) { return data_.data() + index(y, x, 0); }
  const double* ptr(int y, int x) const { return data_.data() + index(y, x, 0); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool all_finite() const;
  std::string shape_string() const;

  /// Bitwise equality of shape and contents.
  bool operator==(const Grid& other) const;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// One flag per pixel position; shared across channels.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width) : height_(height), width_(width), bits_(std::size_t(height) * width, 0) {}

  int height() const { return height_; }
  int width() const { return width_; }
  bool test(int y, int x) const { return bits_[std::size_t(y) * width_ + x] != 0; }
  void set(int y, int x, bool on = true) { bits_[std::size_t(y) * width_ + x] = on ? 1 : 0; }
  std::size_t count() const;
  bool intersects(const BinaryMask& other) const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

void require_same_shape(const Grid& a, const Grid& b, const char* what);

Grid operator+(const Grid& a, const Grid& b);
Grid operator-(const Grid& a, const Grid& b);
Grid operator*(double s, const Grid& g);

/// a + s * b, evaluated elementwise in that order.
Grid add_scaled(const Grid& a, double s, const Grid& b);

/// Nearest-neighbour shrink: out(y, x) = src(floor(y*H/out_h), floor(x*W/out_w)).
Grid downsample_nearest(const Grid& src, int out_h, int out_w);
/// Nearest-neighbour enlarge with the same floor index map as downsample_nearest.
Grid upsample_nearest(const Grid& src, int out_h, int out_w);
/// Floor-map resize in any direction per axis. Used where one axis grows while
/// the other shrinks.
Grid resize_nearest(const Grid& src, int out_h, int out_w);

struct PadResult {
  Grid grid;
  Rect placement;
};

/// Writes src into the centre of a copy of fill. Offsets are floor((out-in)/2).
PadResult pad_center(const Grid& src, int out_h, int out_w, const Grid& fill);

Grid crop(const Grid& src, const Rect& window);

/// Copies src into dst at the window position. src must have the window's size.
void paste(Grid& dst, const Grid& src, const Rect& window);

/// Mask-set positions take `fresh`, all others keep `keep`.
Grid blend_masked(const Grid& keep, const Grid& fresh, const BinaryMask& mask);

double frobenius_norm(const Grid& g);
double frobenius_distance(const Grid& a, const Grid& b);
double rms_distance(const Grid& a, const Grid& b);

}  // namespace elastic
