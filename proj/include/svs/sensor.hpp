// Software model of a background-filtering vision sensor: QQVGA motion
// bitmaps from an EMA background, neighbor-count erosion, projection alarm,
// MD/IM mode switching with a fixed-length burst, and the LSB payload that
// carries the bitmap inside delivered VGA frames.
#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "svs/core.hpp"

namespace svs {

struct SensorConfig {
  double alpha = 0.05;  // background update rate
  double theta = 15.0;  // |frame - background| threshold
  int erosion_k = 2;    // minimum asserted 8-neighbors to survive erosion
  int min_run_x = 3;
  int min_run_y = 3;
  int burst_len = 10;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("sensor.alpha must be in (0,1]");
    if (!(theta >= 0.0)) throw ValidationError("sensor.theta must be >= 0");
    if (erosion_k < 0 || erosion_k > 8) throw ValidationError("sensor.erosion_k must be in [0,8]");
    if (min_run_x < 1 || min_run_y < 1) throw ValidationError("sensor.min_run_* must be >= 1");
    if (burst_len < 1) throw ValidationError("sensor.burst_len must be >= 1");
  }
};

enum class SensorMode { MotionDetection, Imaging };

struct SensorState {
  explicit SensorState(SensorConfig cfg = {}) : config(cfg) { config.validate(); }

  std::vector<double> background;  // empty until the first frame arrives
  SensorMode mode = SensorMode::MotionDetection;
  int burst_remaining = 0;
  SensorConfig config;
};

struct NoEvent {};
struct AlarmRaised {
  MotionBitmap bitmap;
};
struct FrameDelivered {
  GrayFrame frame;  // VGA input: LSB-encoded VGA frame; QQVGA input: the QQVGA frame
  MotionBitmap bitmap;
};
using SensorEvent = std::variant<NoEvent, AlarmRaised, FrameDelivered>;

/// 4x4 block average of a 480x640 frame, rounded half up.
inline GrayFrame subsample_qqvga(const GrayFrame& vga) {
  if (!vga.is_vga()) throw ValidationError("subsample_qqvga: expected 480x640 frame");
  GrayFrame out(kBitmapRows, kBitmapCols);
  for (int r = 0; r < kBitmapRows; ++r) {
    for (int c = 0; c < kBitmapCols; ++c) {
      int sum = 0;
      for (int dr = 0; dr < 4; ++dr)
        for (int dc = 0; dc < 4; ++dc) sum += vga.at(4 * r + dr, 4 * c + dc);
      out.at(r, c) = static_cast<std::uint8_t>((sum + 8) / 16);
    }
  }
  return out;
}

/// Thresholded background difference, then EMA update of the background.
/// The first frame seeds the background and yields an empty bitmap.
inline MotionBitmap motion_step(SensorState& state, const GrayFrame& frame) {
  if (!frame.is_qqvga()) throw ValidationError("motion_step: expected 120x160 frame");
  MotionBitmap bm;
  auto px = frame.pixels();
  if (state.background.empty()) {
    state.background.assign(px.begin(), px.end());
    return bm;
  }
  const double a = state.config.alpha;
  for (int r = 0; r < kBitmapRows; ++r) {
    for (int c = 0; c < kBitmapCols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * kBitmapCols + c;
      double& bg = state.background[i];
      const double v = px[i];
      if (std::abs(v - bg) > state.config.theta) bm.set(r, c, true);
      bg = (1.0 - a) * bg + a * v;
    }
  }
  return bm;
}

/// Keeps a hot-pixel iff at least k of its 8 neighbors are hot (zero padding).
inline MotionBitmap erode(const MotionBitmap& bm, int k) {
  if (k < 0 || k > 8) throw ValidationError("erode: k must be in [0,8]");
  auto out = MotionBitmap::with_dims(bm.rows(), bm.cols());
  for (int r = 0; r < bm.rows(); ++r) {
    for (int c = 0; c < bm.cols(); ++c) {
      if (!bm.at(r, c)) continue;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if ((dr || dc) && bm.contains(r + dr, c + dc) && bm.at(r + dr, c + dc)) ++n;
      if (n >= k) out.set(r, c, true);
    }
  }
  return out;
}

/// Length of the longest run of strictly positive entries.
inline int longest_positive_run(std::span<const int> v) {
  int best = 0, cur = 0;
  for (int x : v) {
    cur = x > 0 ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

inline bool check_alarm(const ProjectionPair& pp, const SensorConfig& cfg) {
  return longest_positive_run(pp.xproj) >= cfg.min_run_x &&
         longest_positive_run(pp.yproj) >= cfg.min_run_y;
}

/// Writes the bitmap into the LSB of the top-left pixel of each 4x4 block and
/// clears every other LSB. Upper seven bits are untouched.
inline GrayFrame encode_lsb(const GrayFrame& vga, const MotionBitmap& bm) {
  if (!vga.is_vga()) throw ValidationError("encode_lsb: expected 480x640 frame");
  if (bm.rows() != kBitmapRows || bm.cols() != kBitmapCols)
    throw ValidationError("encode_lsb: expected 120x160 bitmap");
  GrayFrame out = vga;
  for (auto& p : out.pixels()) p &= 0xFE;
  for (int r = 0; r < kBitmapRows; ++r)
    for (int c = 0; c < kBitmapCols; ++c)
      if (bm.at(r, c)) out.at(4 * r, 4 * c) |= 1;
  return out;
}

struct DecodedFrame {
  GrayFrame image;  // all LSBs zero
  MotionBitmap bitmap;
};

inline DecodedFrame decode_lsb(const GrayFrame& vga) {
  if (!vga.is_vga()) throw ValidationError("decode_lsb: expected 480x640 frame");
  DecodedFrame d{vga, MotionBitmap{}};
  for (int r = 0; r < kBitmapRows; ++r)
    for (int c = 0; c < kBitmapCols; ++c) d.bitmap.set(r, c, vga.at(4 * r, 4 * c) & 1);
  for (auto& p : d.image.pixels()) p &= 0xFE;
  return d;
}

/// One sensor clock. VGA frames are subsampled first; QQVGA frames are used
/// as-is (the bitmap then travels beside the frame instead of in its LSBs).
inline SensorEvent sensor_tick(SensorState& state, const GrayFrame& frame) {
  GrayFrame qq;
  if (frame.is_vga()) {
    qq = subsample_qqvga(frame);
  } else if (frame.is_qqvga()) {
    qq = frame;
  } else {
    throw ValidationError("sensor_tick: frame must be 480x640 or 120x160");
  }
  MotionBitmap bm = erode(motion_step(state, qq), state.config.erosion_k);

  if (state.mode == SensorMode::Imaging) {
    // Alarms are ignored while a burst is in flight.
    FrameDelivered ev{frame.is_vga() ? encode_lsb(frame, bm) : frame, std::move(bm)};
    if (--state.burst_remaining == 0) state.mode = SensorMode::MotionDetection;
    return ev;
  }
  if (check_alarm(project(bm), state.config)) {
    state.mode = SensorMode::Imaging;
    state.burst_remaining = state.config.burst_len;
    return AlarmRaised{std::move(bm)};
  }
  return NoEvent{};
}

}  // namespace svs
