// Shared primitives: motion bitmaps, gray frames, projections, boxes,
// moments and IoU. Coordinates are x = column, y = row, origin top-left.
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svs/op_count.hpp"

namespace svs {

inline constexpr int kBitmapRows = 120;
inline constexpr int kBitmapCols = 160;
inline constexpr int kVgaRows = 480;
inline constexpr int kVgaCols = 640;

/// Base for all recoverable library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented contract (bad file, bad config, wrong size).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Binary grid of hot-pixels. 120x160 unless built through with_dims().
class MotionBitmap {
 public:
  MotionBitmap() : MotionBitmap(kBitmapRows, kBitmapCols) {}

  static MotionBitmap with_dims(int rows, int cols) { return MotionBitmap(rows, cols); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool at(int r, int c) const { return bits_[index(r, c)] != 0; }
  void set(int r, int c, bool v) { bits_[index(r, c)] = v ? 1 : 0; }

  bool contains(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }

  std::int64_t popcount() const {
    return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
  }

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const MotionBitmap&, const MotionBitmap&) = default;

 private:
  MotionBitmap(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0) throw ValidationError("bitmap dimensions must be positive");
    bits_.assign(static_cast<std::size_t>(rows) * cols, 0);
  }

  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }

  int rows_;
  int cols_;
  std::vector<std::uint8_t> bits_;
};

/// 8-bit grayscale image, row-major.
class GrayFrame {
 public:
  GrayFrame() = default;
  GrayFrame(int rows, int cols, std::uint8_t fill = 0) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0) throw ValidationError("frame dimensions must be positive");
    pixels_.assign(static_cast<std::size_t>(rows) * cols, fill);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool is_vga() const { return rows_ == kVgaRows && cols_ == kVgaCols; }
  bool is_qqvga() const { return rows_ == kBitmapRows && cols_ == kBitmapCols; }

  std::uint8_t at(int r, int c) const { return pixels_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::uint8_t& at(int r, int c) { return pixels_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const GrayFrame&, const GrayFrame&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Per-column (x) and per-row (y) hot-pixel counts.
struct ProjectionPair {
  std::vector<int> xproj;
  std::vector<int> yproj;
};

/// Inclusive pixel box: a box with x0 == x1 and y0 == y1 covers one pixel.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::int64_t area() const { return static_cast<std::int64_t>(width()) * height(); }
  bool valid() const { return x0 <= x1 && y0 <= y1; }
  bool inside(const MotionBitmap& bm) const {
    return valid() && x0 >= 0 && y0 >= 0 && x1 < bm.cols() && y1 < bm.rows();
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Raw and central moments of the hot-pixels inside a box. `defined` is false
/// when the box holds no hot-pixel; centroid and variances are then zero and
/// must not be used.
struct Moments {
  std::int64_t m00 = 0;
  double cx = 0.0;
  double cy = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  bool defined = false;

  friend bool operator==(const Moments&, const Moments&) = default;
};

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  if (ix0 > ix1 || iy0 > iy1) return 0.0;
  const auto inter = static_cast<std::int64_t>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
  const auto uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline ProjectionPair project(const MotionBitmap& bm, OpCounts* ops = nullptr) {
  ProjectionPair pp;
  pp.xproj.assign(bm.cols(), 0);
  pp.yproj.assign(bm.rows(), 0);
  std::int64_t hot = 0;
  for (int r = 0; r < bm.rows(); ++r) {
    for (int c = 0; c < bm.cols(); ++c) {
      if (bm.at(r, c)) {
        ++pp.xproj[c];
        ++pp.yproj[r];
        ++hot;
      }
    }
  }
  if (ops) {
    const auto cells = static_cast<std::uint64_t>(bm.rows()) * bm.cols();
    ops->memory += cells + 2 * static_cast<std::uint64_t>(hot);
    ops->comparisons += cells;
    ops->arithmetic += 2 * static_cast<std::uint64_t>(hot);
  }
  return pp;
}

/// Moments of the hot-pixels within `box`. Sums are accumulated in integers so
/// the population variances carry a single rounding.
inline Moments moments(const MotionBitmap& bm, const BoundingBox& box, OpCounts* ops = nullptr) {
  if (!box.inside(bm)) throw ValidationError("moments: box outside bitmap");
  std::int64_t n = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int r = box.y0; r <= box.y1; ++r) {
    for (int c = box.x0; c <= box.x1; ++c) {
      if (bm.at(r, c)) {
        ++n;
        sx += c;
        sy += r;
        sxx += static_cast<std::int64_t>(c) * c;
        syy += static_cast<std::int64_t>(r) * r;
      }
    }
  }
  if (ops) {
    const auto cells = static_cast<std::uint64_t>(box.area());
    ops->memory += cells;
    ops->comparisons += cells;
    ops->arithmetic += 7 * static_cast<std::uint64_t>(n);
  }
  Moments m;
  m.m00 = n;
  if (n == 0) return m;
  const double dn = static_cast<double>(n);
  m.defined = true;
  m.cx = static_cast<double>(sx) / dn;
  m.cy = static_cast<double>(sy) / dn;
  m.var_x = static_cast<double>(n * sxx - sx * sx) / (dn * dn);
  m.var_y = static_cast<double>(n * syy - sy * sy) / (dn * dn);
  if (ops) ops->arithmetic += 12;
  return m;
}

}  // namespace svs
