// SPDX-License-Identifier: Apache-2.0
#include "elastic/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "elastic/error.hpp"

namespace elastic {

std::string to_string(const Rect& r) {
  return "(" + std::to_string(r.y0) + "," + std::to_string(r.x0) + "," + std::to_string(r.h) + "," +
         std::to_string(r.w) + ")";
}

Grid::Grid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    fail(Errc::invalid_argument, "grid dimensions must be positive, got " + shape_string());
  }
  data_.assign(std::size_t(height) * width * channels, fill);
}

Grid::Grid(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 1 || width < 1 || channels < 1) {
    fail(Errc::invalid_argument, "grid dimensions must be positive, got " + shape_string());
  }
  if (data_.size() != std::size_t(height) * width * channels) {
    fail(Errc::shape_mismatch, "grid data length " + std::to_string(data_.size()) + " does not match " +
                                   shape_string());
  }
}

bool Grid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Grid::shape_string() const {
  return std::to_string(height_) + "x" + std::to_string(width_) + "x" + std::to_string(channels_);
}

bool Grid::operator==(const Grid& other) const {
  return same_shape(other) &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

std::size_t BinaryMask::count() const { return std::size_t(std::count(bits_.begin(), bits_.end(), 1)); }

bool BinaryMask::intersects(const BinaryMask& other) const {
  if (height_ != other.height_ || width_ != other.width_) {
    fail(Errc::shape_mismatch, "mask dimensions differ");
  }
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && other.bits_[i]) return true;
  }
  return false;
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(Errc::shape_mismatch, std::string(what) + ": shape " + a.shape_string() + " vs " + b.shape_string());
  }
}

Grid operator+(const Grid& a, const Grid& b) {
  require_same_shape(a, b, "add");
  Grid out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

Grid operator-(const Grid& a, const Grid& b) {
  require_same_shape(a, b, "subtract");
  Grid out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

Grid operator*(double s, const Grid& g) {
  Grid out = g;
  for (double& v : out.values()) v *= s;
  return out;
}

Grid add_scaled(const Grid& a, double s, const Grid& b) {
  require_same_shape(a, b, "add_scaled");
  Grid out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = o[i] + s * bv[i];
  return out;
}

namespace {

Grid remap(const Grid& src, int out_h, int out_w) {
  Grid out(out_h, out_w, src.channels());
  const int c = src.channels();
  for (int y = 0; y < out_h; ++y) {
    const int sy = int(std::int64_t(y) * src.height() / out_h);
    for (int x = 0; x < out_w; ++x) {
      const int sx = int(std::int64_t(x) * src.width() / out_w);
      for (int k = 0; k < c; ++k) out.at(y, x, k) = src.at(sy, sx, k);
    }
  }
  return out;
}

}  // namespace

Grid downsample_nearest(const Grid& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1 || out_h > src.height() || out_w > src.width()) {
    fail(Errc::invalid_argument, "downsample target " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                                     " invalid for source " + src.shape_string());
  }
  return remap(src, out_h, out_w);
}

Grid upsample_nearest(const Grid& src, int out_h, int out_w) {
  if (out_h < src.height() || out_w < src.width()) {
    fail(Errc::invalid_argument, "upsample target " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                                     " smaller than source " + src.shape_string());
  }
  return remap(src, out_h, out_w);
}

Grid resize_nearest(const Grid& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) fail(Errc::invalid_argument, "resize target must be positive");
  return remap(src, out_h, out_w);
}

PadResult pad_center(const Grid& src, int out_h, int out_w, const Grid& fill) {
  if (out_h < src.height() || out_w < src.width()) {
    fail(Errc::invalid_argument, "pad target smaller than source " + src.shape_string());
  }
  if (fill.height() != out_h || fill.width() != out_w || fill.channels() != src.channels()) {
    fail(Errc::shape_mismatch, "pad fill is " + fill.shape_string() + ", expected " + std::to_string(out_h) + "x" +
                                   std::to_string(out_w) + "x" + std::to_string(src.channels()));
  }
  Rect placement{(out_h - src.height()) / 2, (out_w - src.width()) / 2, src.height(), src.width()};
  PadResult result{fill, placement};
  paste(result.grid, src, placement);
  return result;
}

Grid crop(const Grid& src, const Rect& window) {
  if (window.h < 1 || window.w < 1 || window.y0 < 0 || window.x0 < 0 || window.y1() > src.height() ||
      window.x1() > src.width()) {
    fail(Errc::out_of_range, "crop window " + to_string(window) + " outside " + src.shape_string());
  }
  Grid out(window.h, window.w, src.channels());
  const std::size_t row = std::size_t(window.w) * src.channels();
  for (int y = 0; y < window.h; ++y) {
    std::copy_n(src.ptr(window.y0 + y, window.x0), row, out.ptr(y, 0));
  }
  return out;
}

void paste(Grid& dst, const Grid& src, const Rect& window) {
  if (src.height() != window.h || src.width() != window.w || src.channels() != dst.channels()) {
    fail(Errc::shape_mismatch, "paste source " + src.shape_string() + " does not fit window " + to_string(window));
  }
  if (window.y0 < 0 || window.x0 < 0 || window.y1() > dst.height() || window.x1() > dst.width()) {
    fail(Errc::out_of_range, "paste window " + to_string(window) + " outside " + dst.shape_string());
  }
  const std::size_t row = std::size_t(window.w) * src.channels();
  for (int y = 0; y < window.h; ++y) {
    std::copy_n(src.ptr(y, 0), row, dst.ptr(window.y0 + y, window.x0));
  }
}

Grid blend_masked(const Grid& keep, const Grid& fresh, const BinaryMask& mask) {
  require_same_shape(keep, fresh, "blend_masked");
  if (mask.height() != keep.height() || mask.width() != keep.width()) {
    fail(Errc::shape_mismatch, "blend mask does not match grid " + keep.shape_string());
  }
  Grid out = keep;
  for (int y = 0; y < keep.height(); ++y) {
    for (int x = 0; x < keep.width(); ++x) {
      if (!mask.test(y, x)) continue;
      for (int c = 0; c < keep.channels(); ++c) out.at(y, x, c) = fresh.at(y, x, c);
    }
  }
  return out;
}

double frobenius_norm(const Grid& g) {
  double acc = 0.0;
  for (double v : g.values()) acc += v * v;
  return std::sqrt(acc);
}

double frobenius_distance(const Grid& a, const Grid& b) {
  require_same_shape(a, b, "frobenius_distance");
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double rms_distance(const Grid& a, const Grid& b) {
  return frobenius_distance(a, b) / std::sqrt(double(a.size()));
}

}  // namespace elastic
