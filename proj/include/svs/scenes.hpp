// Scripted synthetic sequences: rectangles of constant contrast moving at
// constant velocity over a textured static background with mild sensor
// noise and sparse impulse noise.
#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "svs/core.hpp"
#include "svs/tracker.hpp"

namespace svs {

struct SceneObject {
  ObjectClass cls = ObjectClass::Car;
  int width = 1;
  int height = 1;
  double x = 0.0;  // left column at start_frame
  double y = 0.0;  // top row at start_frame
  double vx = 0.0;
  double vy = 0.0;
  int start_frame = 0;
  int end_frame = 1 << 30;  // exclusive
  int contrast = 40;        // added to the background, may be negative
};

struct Scene {
  std::string name;
  int frames = 0;
  std::uint64_t seed = 1;
  double noise_sd = 2.0;
  double impulse_prob = 2e-4;
  std::vector<SceneObject> objects;

  GroundTruth ground_truth() const {
    GroundTruth gt;
    for (const auto& o : objects) ++gt.counts[static_cast<std::size_t>(o.cls)];
    return gt;
  }
};

namespace detail {

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// QQVGA rendering of frame t.
inline GrayFrame render_scene(const Scene& s, int t) {
  GrayFrame f(kBitmapRows, kBitmapCols);
  std::mt19937_64 texture_rng(detail::mix(s.seed, 0));
  std::uniform_int_distribution<int> texture(-8, 8);
  std::vector<int> base(static_cast<std::size_t>(kBitmapRows) * kBitmapCols);
  for (int r = 0; r < kBitmapRows; ++r)
    for (int c = 0; c < kBitmapCols; ++c)
      base[static_cast<std::size_t>(r) * kBitmapCols + c] = 90 + r / 4 + texture(texture_rng);

  for (const auto& o : s.objects) {
    if (t < o.start_frame || t >= o.end_frame) continue;
    const int dt = t - o.start_frame;
    const int x0 = static_cast<int>(std::floor(o.x + o.vx * dt + 0.5));
    const int y0 = static_cast<int>(std::floor(o.y + o.vy * dt + 0.5));
    for (int r = std::max(0, y0); r < std::min(kBitmapRows, y0 + o.height); ++r)
      for (int c = std::max(0, x0); c < std::min(kBitmapCols, x0 + o.width); ++c)
        base[static_cast<std::size_t>(r) * kBitmapCols + c] += o.contrast;
  }

  std::mt19937_64 rng(detail::mix(s.seed, static_cast<std::uint64_t>(t) + 1));
  std::normal_distribution<double> noise(0.0, s.noise_sd);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < kBitmapRows; ++r) {
    for (int c = 0; c < kBitmapCols; ++c) {
      double v = base[static_cast<std::size_t>(r) * kBitmapCols + c] + noise(rng);
      if (u(rng) < s.impulse_prob) v += 80.0;
      f.at(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
    }
  }
  return f;
}

/// Pixel-replicated VGA version of a QQVGA frame: subsample_qqvga returns
/// the original exactly.
inline GrayFrame upscale_vga(const GrayFrame& qq) {
  GrayFrame out(kVgaRows, kVgaCols);
  for (int r = 0; r < kVgaRows; ++r)
    for (int c = 0; c < kVgaCols; ++c) out.at(r, c) = qq.at(r / 4, c / 4);
  return out;
}

inline std::vector<GrayFrame> render_sequence(const Scene& s, bool vga = false) {
  std::vector<GrayFrame> frames;
  frames.reserve(s.frames);
  for (int t = 0; t < s.frames; ++t) {
    GrayFrame f = render_scene(s, t);
    frames.push_back(vga ? upscale_vga(f) : std::move(f));
  }
  return frames;
}

// Object templates sized to the synthetic classifier data at unit scale.
inline SceneObject car_at(double x, double y, double vx, int start, int contrast = 40) {
  return {ObjectClass::Car, 14, 11, x, y, vx, 0.0, start, 1 << 30, contrast};
}

inline SceneObject pedestrian_at(double x, double y, double vx, int start, int contrast = 40) {
  return {ObjectClass::Pedestrian, 6, 16, x, y, vx, 0.0, start, 1 << 30, contrast};
}

inline Scene scene_single_car() {
  Scene s{"single_car", 70, 11, 2.0, 2e-4, {}};
  s.objects.push_back(car_at(-14, 70, 3.0, 2));
  return s;
}

/// One car, then two pedestrians walking in opposite directions whose paths
/// cross in x while on different rows.
inline Scene scene_car_and_pedestrians() {
  Scene s{"car_and_pedestrians", 150, 12, 2.0, 2e-4, {}};
  s.objects.push_back(car_at(-14, 78, 3.0, 2));
  s.objects.push_back(pedestrian_at(-6, 22, 2.0, 64));
  s.objects.push_back(pedestrian_at(160, 44, -2.0, 64, -40));
  return s;
}

/// Six pedestrians in three waves; the first wave is a pair passing each
/// other on overlapping rows.
inline Scene scene_six_pedestrians() {
  Scene s{"six_pedestrians", 260, 13, 2.0, 2e-4, {}};
  s.objects.push_back(pedestrian_at(-6, 30, 2.0, 2));
  s.objects.push_back(pedestrian_at(160, 38, -2.0, 2, -40));
  s.objects.push_back(pedestrian_at(-6, 20, 2.0, 90));
  s.objects.push_back(pedestrian_at(160, 70, -2.0, 90));
  s.objects.push_back(pedestrian_at(-6, 50, 2.0, 175, -40));
  s.objects.push_back(pedestrian_at(160, 85, -2.0, 175));
  return s;
}

/// Busier mixed traffic used for operation-count benchmarking.
inline Scene scene_urban_mix() {
  Scene s{"urban_mix", 120, 14, 2.0, 2e-4, {}};
  s.objects.push_back(car_at(-14, 80, 3.0, 2));
  s.objects.push_back(car_at(160, 95, -3.0, 30, -40));
  s.objects.push_back(pedestrian_at(-6, 15, 2.0, 5));
  s.objects.push_back(pedestrian_at(160, 40, -2.0, 20, -40));
  s.objects.push_back(pedestrian_at(40, 58, 1.5, 50));
  return s;
}

inline std::vector<Scene> counting_suite() {
  return {scene_single_car(), scene_car_and_pedestrians(), scene_six_pedestrians()};
}

inline std::vector<Scene> urban_suite() {
  return {scene_single_car(), scene_car_and_pedestrians(), scene_six_pedestrians(),
          scene_urban_mix()};
}

inline std::vector<Scene> all_scenes() { return urban_suite(); }

}  // namespace svs
