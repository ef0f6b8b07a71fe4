// Projection-based two-stage detector and its connected-components baseline.
//
// Stage one turns each projection into runs of active entries and takes the
// Cartesian product of x-runs and y-runs as candidate boxes. Stage two drops
// candidates whose hot-pixel count is below min_area. Every 8-connected
// component has contiguous projections, so it lies inside exactly one
// candidate; candidates can be larger than the component's tight box when
// other objects share its rows or columns.
#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "svs/core.hpp"

namespace svs {

/// Inclusive run [lo, hi] of active projection entries.
struct Interval {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class BlobSource { Proposal, Oracle };

struct Blob {
  BoundingBox box;
  Moments moments;
  BlobSource source = BlobSource::Proposal;
  friend bool operator==(const Blob&, const Blob&) = default;
};

struct DetectorConfig {
  int tau = 0;       // projection entries > tau are active
  int min_area = 4;  // minimum hot-pixels for a proposal to survive

  void validate() const {
    if (tau < 0) throw ValidationError("detector.tau must be >= 0");
    if (min_area < 1) throw ValidationError("detector.min_area must be >= 1");
  }
};

/// Maximal runs of entries > tau in ascending order.
inline std::vector<Interval> extract_intervals(std::span<const int> proj, int tau = 0,
                                               OpCounts* ops = nullptr) {
  std::vector<Interval> out;
  const int n = static_cast<int>(proj.size());
  for (int i = 0; i < n; ++i) {
    if (proj[i] > tau && (i == 0 || proj[i - 1] <= tau)) out.push_back({i, i});
    if (proj[i] > tau) out.back().hi = i;
  }
  if (ops) {
    ops->memory += proj.size() + 2 * out.size();
    ops->comparisons += proj.size();
  }
  return out;
}

/// Cartesian product of runs, y outer and x inner.
inline std::vector<BoundingBox> propose_regions(std::span<const Interval> x_ints,
                                                std::span<const Interval> y_ints,
                                                OpCounts* ops = nullptr) {
  std::vector<BoundingBox> boxes;
  boxes.reserve(x_ints.size() * y_ints.size());
  for (const auto& yi : y_ints)
    for (const auto& xi : x_ints) boxes.push_back({xi.lo, yi.lo, xi.hi, yi.hi});
  if (ops) ops->memory += 4 * boxes.size();
  return boxes;
}

inline std::vector<Blob> filter_empty(const MotionBitmap& bm, std::span<const BoundingBox> boxes,
                                      int min_area, OpCounts* ops = nullptr) {
  if (min_area < 1) throw ValidationError("filter_empty: min_area must be >= 1");
  std::vector<Blob> kept;
  for (const auto& box : boxes) {
    Moments m = moments(bm, box, ops);
    if (ops) ++ops->comparisons;
    if (m.m00 >= min_area) kept.push_back({box, m, BlobSource::Proposal});
  }
  return kept;
}

/// Detection from projections already available (the sensor computes them).
inline std::vector<Blob> detect_from_projections(const MotionBitmap& bm, const ProjectionPair& pp,
                                                 const DetectorConfig& cfg = {},
                                                 OpCounts* proposal_ops = nullptr,
                                                 OpCounts* filter_ops = nullptr) {
  const auto xs = extract_intervals(pp.xproj, cfg.tau, proposal_ops);
  const auto ys = extract_intervals(pp.yproj, cfg.tau, proposal_ops);
  const auto boxes = propose_regions(xs, ys, proposal_ops);
  return filter_empty(bm, boxes, cfg.min_area, filter_ops);
}

inline std::vector<Blob> detect(const MotionBitmap& bm, const DetectorConfig& cfg = {}) {
  return detect_from_projections(bm, project(bm), cfg);
}

/// 8-connected components, scanned in row-major order of their first pixel.
/// Moments are taken over each component's tight box on the full bitmap.
inline std::vector<Blob> connected_components(const MotionBitmap& bm, OpCounts* ops = nullptr) {
  const int rows = bm.rows(), cols = bm.cols();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(rows) * cols, 0);
  std::vector<std::pair<int, int>> stack;
  std::vector<Blob> out;
  OpCounts local;

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      local.memory += 2;
      local.comparisons += 2;
      const std::size_t idx = static_cast<std::size_t>(r) * cols + c;
      if (!bm.at(r, c) || seen[idx]) continue;

      BoundingBox box{c, r, c, r};
      seen[idx] = 1;
      stack.assign(1, {r, c});
      local.memory += 2;
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        local.memory += 1;
        box.x0 = std::min(box.x0, pc);
        box.x1 = std::max(box.x1, pc);
        box.y0 = std::min(box.y0, pr);
        box.y1 = std::max(box.y1, pr);
        local.comparisons += 4;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (!dr && !dc) continue;
            const int nr = pr + dr, nc = pc + dc;
            local.arithmetic += 2;
            local.comparisons += 4;
            if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
            const std::size_t nidx = static_cast<std::size_t>(nr) * cols + nc;
            local.memory += 2;
            local.comparisons += 2;
            if (!bm.at(nr, nc) || seen[nidx]) continue;
            seen[nidx] = 1;
            stack.push_back({nr, nc});
            local.memory += 2;
          }
        }
      }
      out.push_back({box, moments(bm, box, &local), BlobSource::Oracle});
    }
  }
  if (ops) *ops += local;
  return out;
}

/// Aggregate proposal-vs-oracle statistics. Accumulates over frames with +=.
struct DetectionComparison {
  std::size_t matched = 0;
  std::size_t unmatched_proposals = 0;
  std::size_t unmatched_oracle = 0;
  std::size_t frames = 0;
  double iou_sum = 0.0;
  double area_ratio_sum = 0.0;

  std::optional<double> mean_iou() const {
    if (matched == 0) return std::nullopt;
    return iou_sum / static_cast<double>(matched);
  }
  std::optional<double> mean_area_ratio() const {
    if (matched == 0) return std::nullopt;
    return area_ratio_sum / static_cast<double>(matched);
  }
  double extra_per_frame() const {
    return frames == 0 ? 0.0 : static_cast<double>(unmatched_proposals) / frames;
  }

  DetectionComparison& operator+=(const DetectionComparison& o) {
    matched += o.matched;
    unmatched_proposals += o.unmatched_proposals;
    unmatched_oracle += o.unmatched_oracle;
    frames += o.frames;
    iou_sum += o.iou_sum;
    area_ratio_sum += o.area_ratio_sum;
    return *this;
  }
};

/// Greedy one-to-one matching by descending IoU; ties go to the lower
/// proposal index, then the lower oracle index. Pairs with zero overlap are
/// never matched.
inline DetectionComparison compare_detections(std::span<const Blob> proposals,
                                              std::span<const Blob> oracle) {
  struct Pair {
    double iou;
    std::size_t p, o;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < proposals.size(); ++p)
    for (std::size_t o = 0; o < oracle.size(); ++o)
      if (double v = iou(proposals[p].box, oracle[o].box); v > 0.0) pairs.push_back({v, p, o});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.iou, a.p, a.o) < std::tie(a.iou, b.p, b.o);
  });

  std::vector<bool> p_used(proposals.size()), o_used(oracle.size());
  DetectionComparison cmp;
  cmp.frames = 1;
  for (const auto& pr : pairs) {
    if (p_used[pr.p] || o_used[pr.o]) continue;
    p_used[pr.p] = o_used[pr.o] = true;
    ++cmp.matched;
    cmp.iou_sum += pr.iou;
    cmp.area_ratio_sum += static_cast<double>(proposals[pr.p].box.area()) /
                          static_cast<double>(oracle[pr.o].box.area());
  }
  cmp.unmatched_proposals = proposals.size() - cmp.matched;
  cmp.unmatched_oracle = oracle.size() - cmp.matched;
  return cmp;
}

}  // namespace svs
