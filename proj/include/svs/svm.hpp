// Four-feature blob descriptor and a linear SVM over min-max normalized
// features. Positive margin means pedestrian; zero or negative means car.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "svs/detector.hpp"

namespace svs {

enum class ObjectClass { Car = 0, Pedestrian = 1 };
inline constexpr std::size_t kNumClasses = 2;

inline std::string_view class_name(ObjectClass c) {
  return c == ObjectClass::Car ? "car" : "pedestrian";
}

inline ObjectClass parse_class(std::string_view s) {
  if (s == "car") return ObjectClass::Car;
  if (s == "pedestrian") return ObjectClass::Pedestrian;
  throw ValidationError("unknown class label '" + std::string(s) + "'");
}

enum class Feature { Area = 0, VarY = 1, VarX = 2, TopY = 3 };
inline constexpr std::size_t kNumFeatures = 4;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{"area", "var_y", "var_x",
                                                                          "top_y"};

using FeatureArray = std::array<double, kNumFeatures>;

struct FeatureVec {
  double area = 0.0;
  double var_y = 0.0;
  double var_x = 0.0;
  double top_y = 0.0;

  FeatureArray as_array() const { return {area, var_y, var_x, top_y}; }
  static FeatureVec from_array(const FeatureArray& a) { return {a[0], a[1], a[2], a[3]}; }
  friend bool operator==(const FeatureVec&, const FeatureVec&) = default;
};

inline FeatureVec extract_features(const Blob& blob) {
  if (!blob.moments.defined) throw ValidationError("extract_features: blob has no hot-pixels");
  return {static_cast<double>(blob.moments.m00), blob.moments.var_y, blob.moments.var_x,
          static_cast<double>(blob.box.y0)};
}

struct Prediction {
  ObjectClass cls = ObjectClass::Car;
  double margin = 0.0;
};

struct SvmModel {
  FeatureArray weights{};
  double bias = 0.0;
  FeatureArray norm_lo{0, 0, 0, 0};
  FeatureArray norm_hi{1, 1, 1, 1};

  void validate() const {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      if (!(norm_lo[i] < norm_hi[i]))
        throw ValidationError("svm model: norm_lo must be < norm_hi for " +
                              std::string(kFeatureNames[i]));
      if (!std::isfinite(weights[i])) throw ValidationError("svm model: non-finite weight");
    }
    if (!std::isfinite(bias)) throw ValidationError("svm model: non-finite bias");
  }

  /// Min-max scaling clamped to [0,1].
  FeatureArray normalize(const FeatureArray& f) const {
    FeatureArray x{};
    for (std::size_t i = 0; i < kNumFeatures; ++i)
      x[i] = std::clamp((f[i] - norm_lo[i]) / (norm_hi[i] - norm_lo[i]), 0.0, 1.0);
    return x;
  }

  double margin(const FeatureArray& f) const {
    const auto x = normalize(f);
    double m = bias;
    for (std::size_t i = 0; i < kNumFeatures; ++i) m += weights[i] * x[i];
    return m;
  }
};

inline Prediction svm_predict(const SvmModel& model, const FeatureVec& f) {
  const double m = model.margin(f.as_array());
  return {m > 0.0 ? ObjectClass::Pedestrian : ObjectClass::Car, m};
}

inline nlohmann::json to_json(const SvmModel& m) {
  return {{"format", "svs-linear-svm"},
          {"version", 1},
          {"features", kFeatureNames},
          {"weights", m.weights},
          {"bias", m.bias},
          {"norm_lo", m.norm_lo},
          {"norm_hi", m.norm_hi},
          {"positive_class", "pedestrian"},
          {"negative_class", "car"}};
}

inline SvmModel svm_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "svs-linear-svm") throw ValidationError("svm model: wrong format tag");
    if (j.at("version") != 1) throw ValidationError("svm model: unsupported version");
    if (j.at("features") != nlohmann::json(kFeatureNames))
      throw ValidationError("svm model: feature order must be area,var_y,var_x,top_y");
    if (j.at("positive_class") != "pedestrian" || j.at("negative_class") != "car")
      throw ValidationError("svm model: classes must be pedestrian(+)/car(-)");
    SvmModel m;
    m.weights = j.at("weights").get<FeatureArray>();
    m.bias = j.at("bias").get<double>();
    m.norm_lo = j.at("norm_lo").get<FeatureArray>();
    m.norm_hi = j.at("norm_hi").get<FeatureArray>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("svm model: ") + e.what());
  }
}

struct LabeledRow {
  FeatureVec features;
  ObjectClass label = ObjectClass::Car;
  friend bool operator==(const LabeledRow&, const LabeledRow&) = default;
};

struct LabeledDataset {
  std::vector<LabeledRow> rows;
  std::string provenance;

  std::size_t count(ObjectClass c) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [c](const auto& r) { return r.label == c; }));
  }
};

struct TrainParams {
  double lambda = 1e-3;
  int epochs = 2000;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 1;      // drives mini-batch order; unused for full batch
};

/// Pegasos hinge-loss subgradient descent on normalized features with step
/// 1/(lambda*t). The bias is the weight of a constant unit feature. Each epoch
/// walks a seeded permutation in batches of batch_size; each step averages
/// the subgradient over its batch.
inline SvmModel svm_train(const LabeledDataset& ds, const TrainParams& p = {}) {
  if (ds.count(ObjectClass::Car) == 0 || ds.count(ObjectClass::Pedestrian) == 0)
    throw ValidationError("svm_train: dataset must contain both classes");
  if (!(p.lambda > 0.0) || p.epochs < 1) throw ValidationError("svm_train: bad parameters");

  SvmModel model;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    double lo = ds.rows.front().features.as_array()[i], hi = lo;
    for (const auto& r : ds.rows) {
      lo = std::min(lo, r.features.as_array()[i]);
      hi = std::max(hi, r.features.as_array()[i]);
    }
    model.norm_lo[i] = lo;
    model.norm_hi[i] = hi > lo ? hi : lo + 1.0;  // constant column normalizes to 0
  }

  constexpr std::size_t kDim = kNumFeatures + 1;
  std::vector<std::array<double, kDim>> xs;
  std::vector<double> ys;
  for (const auto& r : ds.rows) {
    const auto x = model.normalize(r.features.as_array());
    xs.push_back({x[0], x[1], x[2], x[3], 1.0});
    ys.push_back(r.label == ObjectClass::Pedestrian ? 1.0 : -1.0);
  }

  const std::size_t n = xs.size();
  const std::size_t batch = p.batch_size == 0 ? n : std::min(p.batch_size, n);
  std::mt19937_64 rng(p.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::array<double, kDim> w{};
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      ++t;
      const double eta = 1.0 / (p.lambda * static_cast<double>(t));
      std::array<double, kDim> grad{};
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x = xs[order[k]];
        double m = 0.0;
        for (std::size_t i = 0; i < kDim; ++i) m += w[i] * x[i];
        if (ys[order[k]] * m < 1.0)
          for (std::size_t i = 0; i < kDim; ++i) grad[i] += ys[order[k]] * x[i];
      }
      const double scale = eta / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < kDim; ++i) w[i] = (1.0 - eta * p.lambda) * w[i] + scale * grad[i];
    }
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) model.weights[i] = w[i];
  model.bias = w[kNumFeatures];
  return model;
}

inline double accuracy(const SvmModel& model, const LabeledDataset& ds) {
  if (ds.rows.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : ds.rows) ok += svm_predict(model, r.features).cls == r.label;
  return static_cast<double>(ok) / static_cast<double>(ds.rows.size());
}

}  // namespace svs
