// Model interpretability: permutation importance and second-order
// accumulated local effects (ALE) over a pair of features.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <random>
#include <vector>

#include "svs/svm.hpp"

namespace svs {

struct Importance {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over repeats
};

/// Accuracy drop when one feature column is shuffled, per feature, over
/// `repeats` seeded permutations.
template <typename Classify>
  requires std::invocable<const Classify&, const FeatureArray&>
std::array<Importance, kNumFeatures> permutation_importance(const Classify& classify,
                                                            const LabeledDataset& ds, int repeats,
                                                            std::uint64_t seed) {
  if (repeats < 2) throw ValidationError("permutation_importance: repeats must be >= 2");
  if (ds.rows.empty()) throw ValidationError("permutation_importance: empty dataset");

  const std::size_t n = ds.rows.size();
  std::vector<FeatureArray> xs;
  for (const auto& r : ds.rows) xs.push_back(r.features.as_array());
  auto acc_of = [&](const std::vector<FeatureArray>& rows) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < n; ++i) ok += classify(rows[i]) == ds.rows[i].label;
    return static_cast<double>(ok) / static_cast<double>(n);
  };
  const double base = acc_of(xs);

  std::mt19937_64 rng(seed);
  std::array<Importance, kNumFeatures> out{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = xs[i][f];
    std::vector<double> drops;
    for (int rep = 0; rep < repeats; ++rep) {
      std::shuffle(column.begin(), column.end(), rng);
      auto shuffled = xs;
      for (std::size_t i = 0; i < n; ++i) shuffled[i][f] = column[i];
      drops.push_back(base - acc_of(shuffled));
    }
    double mean = 0.0;
    for (double d : drops) mean += d;
    mean /= repeats;
    double var = 0.0;
    for (double d : drops) var += (d - mean) * (d - mean);
    out[f] = {mean, std::sqrt(var / repeats)};
  }
  return out;
}

inline std::array<Importance, kNumFeatures> permutation_importance(const SvmModel& model,
                                                                   const LabeledDataset& ds,
                                                                   int repeats,
                                                                   std::uint64_t seed) {
  return permutation_importance(
      [&model](const FeatureArray& f) { return svm_predict(model, FeatureVec::from_array(f)).cls; },
      ds, repeats, seed);
}

/// Second-order ALE surface. `values[k][l]` is the centered effect of cell
/// (bin k of feature f1, bin l of feature f2); `counts[k][l]` its population.
/// Edges hold bins+1 quantiles per axis.
struct AleGrid {
  Feature f1 = Feature::Area;
  Feature f2 = Feature::VarY;
  std::vector<double> edges_f1;
  std::vector<double> edges_f2;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<double>> uncentered;  // accumulated effect at corners, (bins+1)^2
};

namespace detail {

/// Linear-interpolated empirical quantiles at k/bins, k = 0..bins.
inline std::vector<double> quantile_edges(std::vector<double> v, int bins) {
  std::sort(v.begin(), v.end());
  std::vector<double> edges(bins + 1);
  const double last = static_cast<double>(v.size() - 1);
  for (int k = 0; k <= bins; ++k) {
    const double pos = last * k / bins;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    edges[k] = v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  }
  return edges;
}

/// Bin index in [0, bins): first bin is closed on the left, others (z_{k-1}, z_k].
inline int bin_of(const std::vector<double>& edges, double x) {
  const int bins = static_cast<int>(edges.size()) - 1;
  const auto it = std::lower_bound(edges.begin() + 1, edges.end() - 1, x);
  return std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, bins - 1);
}

}  // namespace detail

/// Quantile-binned second-order ALE of `margin` over features (f1, f2).
///
/// For each cell the local effect is the mean over its points of the mixed
/// second difference of `margin` at the four cell corners, other features
/// held at the point's values. Empty cells take the local effect of the
/// nearest populated cell (Euclidean in bin indices, ties to the lowest
/// (k, l)). Effects are double-accumulated, both first-order accumulated
/// effects are subtracted, and the cell-averaged surface is centered on its
/// population-weighted mean.
template <typename Margin>
  requires std::invocable<const Margin&, const FeatureArray&>
AleGrid ale_second_order(const Margin& margin, const LabeledDataset& ds, Feature f1, Feature f2,
                         int bins = 10) {
  if (ds.rows.empty()) throw ValidationError("ale_second_order: empty dataset");
  if (f1 == f2) throw ValidationError("ale_second_order: features must differ");
  if (bins < 1) throw ValidationError("ale_second_order: bins must be >= 1");

  const auto i1 = static_cast<std::size_t>(f1);
  const auto i2 = static_cast<std::size_t>(f2);
  const auto K = static_cast<std::size_t>(bins);

  AleGrid g;
  g.f1 = f1;
  g.f2 = f2;
  {
    std::vector<double> c1, c2;
    for (const auto& r : ds.rows) {
      c1.push_back(r.features.as_array()[i1]);
      c2.push_back(r.features.as_array()[i2]);
    }
    g.edges_f1 = detail::quantile_edges(std::move(c1), bins);
    g.edges_f2 = detail::quantile_edges(std::move(c2), bins);
  }

  using Grid = std::vector<std::vector<double>>;
  Grid delta(K, std::vector<double>(K, 0.0));
  g.counts.assign(K, std::vector<std::size_t>(K, 0));
  for (const auto& r : ds.rows) {
    const FeatureArray x = r.features.as_array();
    const auto k = static_cast<std::size_t>(detail::bin_of(g.edges_f1, x[i1]));
    const auto l = static_cast<std::size_t>(detail::bin_of(g.edges_f2, x[i2]));
    auto at = [&](double a, double b) {
      FeatureArray z = x;
      z[i1] = a;
      z[i2] = b;
      return static_cast<double>(margin(z));
    };
    const double lo1 = g.edges_f1[k], hi1 = g.edges_f1[k + 1];
    const double lo2 = g.edges_f2[l], hi2 = g.edges_f2[l + 1];
    delta[k][l] += (at(hi1, hi2) - at(lo1, hi2)) - (at(hi1, lo2) - at(lo1, lo2));
    ++g.counts[k][l];
  }

  Grid local(K, std::vector<double>(K, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      if (g.counts[k][l] > 0) {
        local[k][l] = delta[k][l] / static_cast<double>(g.counts[k][l]);
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = 0; b < K; ++b) {
          if (g.counts[a][b] == 0) continue;
          const double da = static_cast<double>(a) - static_cast<double>(k);
          const double db = static_cast<double>(b) - static_cast<double>(l);
          if (const double d = da * da + db * db; d < best) {
            best = d;
            local[k][l] = delta[a][b] / static_cast<double>(g.counts[a][b]);
          }
        }
      }
    }
  }

  // Double accumulation onto the (K+1)x(K+1) corner lattice.
  Grid acc(K + 1, std::vector<double>(K + 1, 0.0));
  for (std::size_t k = 1; k <= K; ++k)
    for (std::size_t l = 1; l <= K; ++l)
      acc[k][l] = local[k - 1][l - 1] + acc[k - 1][l] + acc[k][l - 1] - acc[k - 1][l - 1];
  g.uncentered = acc;

  // First-order effect of f1 contained in acc: population-weighted mean over
  // f2 of the per-cell f1 increment, then accumulated. Same for f2.
  std::vector<double> b1(K + 1, 0.0), b2(K + 1, 0.0);
  for (std::size_t k = 1; k <= K; ++k) {
    double num = 0.0, den = 0.0;
    for (std::size_t l = 1; l <= K; ++l) {
      const double inc = 0.5 * ((acc[k][l - 1] - acc[k - 1][l - 1]) + (acc[k][l] - acc[k - 1][l]));
      num += static_cast<double>(g.counts[k - 1][l - 1]) * inc;
      den += static_cast<double>(g.counts[k - 1][l - 1]);
    }
    b1[k] = b1[k - 1] + (den > 0.0 ? num / den : 0.0);
  }
  for (std::size_t l = 1; l <= K; ++l) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
      const double inc = 0.5 * ((acc[k - 1][l] - acc[k - 1][l - 1]) + (acc[k][l] - acc[k][l - 1]));
      num += static_cast<double>(g.counts[k - 1][l - 1]) * inc;
      den += static_cast<double>(g.counts[k - 1][l - 1]);
    }
    b2[l] = b2[l - 1] + (den > 0.0 ? num / den : 0.0);
  }

  Grid corner(K + 1, std::vector<double>(K + 1, 0.0));
  for (std::size_t k = 0; k <= K; ++k)
    for (std::size_t l = 0; l <= K; ++l) corner[k][l] = acc[k][l] - b1[k] - b2[l];

  g.values.assign(K, std::vector<double>(K, 0.0));
  double weighted = 0.0, total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      g.values[k][l] =
          0.25 * (corner[k][l] + corner[k + 1][l] + corner[k][l + 1] + corner[k + 1][l + 1]);
      weighted += static_cast<double>(g.counts[k][l]) * g.values[k][l];
      total += static_cast<double>(g.counts[k][l]);
    }
  }
  const double grand = weighted / total;
  for (auto& row : g.values)
    for (double& v : row) v -= grand;
  return g;
}

inline AleGrid ale_second_order(const SvmModel& model, const LabeledDataset& ds, Feature f1,
                                Feature f2, int bins = 10) {
  return ale_second_order([&model](const FeatureArray& f) { return model.margin(f); }, ds, f1, f2,
                          bins);
}

}  // namespace svs
