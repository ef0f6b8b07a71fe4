#include <gtest/gtest.h>

#include <sstream>

#include "svs/dataset.hpp"
#include "svs/explain.hpp"
#include "svs/svm.hpp"
#include "test_util.hpp"

namespace svs {
namespace {

Blob blob_of(const MotionBitmap& bm, const BoundingBox& box) {
  return {box, moments(bm, box), BlobSource::Proposal};
}

LabeledDataset toy_separable() {
  // Tall thin things are pedestrians, wide flat things are cars.
  LabeledDataset ds;
  for (int i = 0; i < 10; ++i) {
    ds.rows.push_back({{80.0 + i, 20.0 + 0.5 * i, 5.0, 40.0 + i}, ObjectClass::Pedestrian});
    ds.rows.push_back({{160.0 + 2 * i, 8.0 + 0.3 * i, 14.0, 42.0 + i}, ObjectClass::Car});
  }
  return ds;
}

TEST(ExtractFeatures, VerticalColumn) {
  MotionBitmap bm;
  testing_util::fill_rect(bm, {5, 3, 5, 12});
  const auto f = extract_features(blob_of(bm, {5, 3, 5, 12}));
  EXPECT_EQ(f.area, 10.0);
  EXPECT_DOUBLE_EQ(f.var_y, 8.25);
  EXPECT_EQ(f.var_x, 0.0);
  EXPECT_EQ(f.top_y, 3.0);
}

TEST(ExtractFeatures, TopYIsTheBoxTopNotThePixelTop) {
  MotionBitmap bm;
  testing_util::fill_rect(bm, {10, 20, 13, 21});
  const auto f = extract_features(blob_of(bm, {8, 15, 14, 25}));
  EXPECT_EQ(f.top_y, 15.0);
  EXPECT_EQ(f.area, 8.0);
  EXPECT_DOUBLE_EQ(f.var_x, 1.25);
  EXPECT_DOUBLE_EQ(f.var_y, 0.25);
}

TEST(ExtractFeatures, EmptyBlobIsRejected) {
  MotionBitmap bm;
  EXPECT_THROW(extract_features(blob_of(bm, {0, 0, 3, 3})), ValidationError);
}

TEST(SvmPredict, SignOfMarginDecidesAndZeroIsCar) {
  SvmModel m;
  m.weights = {0.0, 1.0, 0.0, 0.0};
  m.bias = -0.5;
  EXPECT_EQ(svm_predict(m, {0, 0.9, 0, 0}).cls, ObjectClass::Pedestrian);
  EXPECT_DOUBLE_EQ(svm_predict(m, {0, 0.9, 0, 0}).margin, 0.4);
  EXPECT_EQ(svm_predict(m, {0, 0.1, 0, 0}).cls, ObjectClass::Car);
  EXPECT_EQ(svm_predict(m, {0, 0.5, 0, 0}).cls, ObjectClass::Car);
}

TEST(SvmPredict, NormalizationClampsOutOfRangeInputs) {
  SvmModel m;
  m.norm_lo = {0, 10, 0, 0};
  m.norm_hi = {1, 30, 1, 1};
  const auto x = m.normalize({0.5, 50, -2, 0.25});
  EXPECT_EQ(x[1], 1.0);
  EXPECT_EQ(x[2], 0.0);
  EXPECT_DOUBLE_EQ(x[0], 0.5);
  EXPECT_DOUBLE_EQ(m.normalize({0, 20, 0, 0})[1], 0.5);
}

TEST(SvmPredict, ClassInvariantUnderPositiveScaling) {
  const auto ds = synth_dataset(50, 4);
  const auto model = svm_train(ds);
  for (double s : {0.01, 0.5, 3.0, 1000.0}) {
    SvmModel scaled = model;
    for (double& w : scaled.weights) w *= s;
    scaled.bias *= s;
    for (const auto& r : ds.rows)
      ASSERT_EQ(svm_predict(scaled, r.features).cls, svm_predict(model, r.features).cls);
  }
}

TEST(SvmTrain, SeparableToySetIsPerfect) {
  const auto ds = toy_separable();
  const auto model = svm_train(ds);
  EXPECT_EQ(accuracy(model, ds), 1.0);
  EXPECT_GT(model.weights[static_cast<int>(Feature::VarY)], 0.0);
  EXPECT_LT(model.weights[static_cast<int>(Feature::Area)], 0.0);
}

TEST(SvmTrain, HeldOutAccuracyOnSyntheticData) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ds = synth_dataset(132, seed);
    const auto [train, test] = stratified_split(ds, 0.7, seed);
    const auto model = svm_train(train);
    EXPECT_GE(accuracy(model, test), 0.95) << "seed " << seed;
  }
}

TEST(SvmTrain, DuplicatingEveryRowLeavesFullBatchModelUnchanged) {
  const auto ds = toy_separable();
  auto doubled = ds;
  doubled.rows.insert(doubled.rows.end(), ds.rows.begin(), ds.rows.end());
  const auto a = svm_train(ds);
  const auto b = svm_train(doubled);
  for (std::size_t i = 0; i < kNumFeatures; ++i) EXPECT_NEAR(a.weights[i], b.weights[i], 1e-12);
  EXPECT_NEAR(a.bias, b.bias, 1e-12);
}

TEST(SvmTrain, DeterministicForFixedSeed) {
  const auto ds = synth_dataset(40, 9);
  TrainParams p;
  p.batch_size = 8;
  p.epochs = 200;
  p.seed = 5;
  const auto a = svm_train(ds, p);
  const auto b = svm_train(ds, p);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_GE(accuracy(a, ds), 0.9);
}

TEST(SvmTrain, RejectsSingleClassAndBadParams) {
  LabeledDataset only_cars;
  only_cars.rows.push_back({{100, 10, 10, 10}, ObjectClass::Car});
  only_cars.rows.push_back({{120, 11, 12, 20}, ObjectClass::Car});
  EXPECT_THROW(svm_train(only_cars), ValidationError);
  TrainParams bad;
  bad.lambda = 0.0;
  EXPECT_THROW(svm_train(toy_separable(), bad), ValidationError);
}

TEST(SvmModelJson, RoundTripIsExact) {
  const auto model = svm_train(synth_dataset(30, 2));
  const auto back = svm_model_from_json(nlohmann::json::parse(to_json(model).dump()));
  EXPECT_EQ(back.weights, model.weights);
  EXPECT_EQ(back.bias, model.bias);
  EXPECT_EQ(back.norm_lo, model.norm_lo);
  EXPECT_EQ(back.norm_hi, model.norm_hi);
}

TEST(SvmModelJson, RejectsWrongFeatureOrderAndBadRanges) {
  auto j = to_json(SvmModel{});
  j["features"] = {"var_y", "area", "var_x", "top_y"};
  EXPECT_THROW(svm_model_from_json(j), ValidationError);
  j = to_json(SvmModel{});
  j["norm_hi"] = {0, 1, 1, 1};
  EXPECT_THROW(svm_model_from_json(j), ValidationError);
  j = to_json(SvmModel{});
  j.erase("bias");
  EXPECT_THROW(svm_model_from_json(j), ValidationError);
}

TEST(SynthDataset, ShapeAndDeterminism) {
  const auto a = synth_dataset(25, 3);
  const auto b = synth_dataset(25, 3);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.count(ObjectClass::Car), 25u);
  EXPECT_EQ(a.count(ObjectClass::Pedestrian), 25u);
  EXPECT_NE(synth_dataset(25, 4).rows, a.rows);
  double ped_vy = 0, car_vy = 0;
  for (const auto& r : a.rows) {
    EXPECT_GE(r.features.top_y, 15.0);
    EXPECT_LT(r.features.top_y, 95.0);
    EXPECT_EQ(r.features.area, std::round(r.features.area));
    (r.label == ObjectClass::Pedestrian ? ped_vy : car_vy) += r.features.var_y;
  }
  EXPECT_GT(ped_vy, car_vy);
  EXPECT_THROW(synth_dataset(1, 1), ValidationError);
}

TEST(StratifiedSplit, PreservesClassBalance) {
  const auto ds = synth_dataset(100, 8);
  const auto [train, test] = stratified_split(ds, 0.7, 1);
  EXPECT_EQ(train.count(ObjectClass::Car), 70u);
  EXPECT_EQ(train.count(ObjectClass::Pedestrian), 70u);
  EXPECT_EQ(test.rows.size(), 60u);
  EXPECT_THROW(stratified_split(ds, 1.0, 1), ValidationError);
}

TEST(DatasetCsv, RoundTripIsExact) {
  const auto ds = synth_dataset(20, 6);
  const std::string csv = dataset_to_csv(ds);
  std::istringstream in(csv);
  const auto back = dataset_from_csv(in);
  EXPECT_EQ(back.rows, ds.rows);
  EXPECT_EQ(dataset_to_csv(back), csv);
}

TEST(DatasetCsv, RejectsMalformedInput) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return dataset_from_csv(in);
  };
  EXPECT_THROW(parse(""), ValidationError);
  EXPECT_THROW(parse("a,b,c\n"), ValidationError);
  EXPECT_THROW(parse("area,var_y,var_x,top_y,label\n1,2,3,4\n"), ValidationError);
  EXPECT_THROW(parse("area,var_y,var_x,top_y,label\n1,2,x,4,car\n"), ValidationError);
  EXPECT_THROW(parse("area,var_y,var_x,top_y,label\n1,2,3,4,truck\n"), ValidationError);
  EXPECT_EQ(parse("area,var_y,var_x,top_y,label\r\n1,2,3,4,car\r\n").rows.size(), 1u);
}

TEST(PermutationImportance, OnlyTheUsedFeatureMatters) {
  const auto ds = synth_dataset(60, 2);
  auto by_var_y = [](const FeatureArray& f) {
    return f[1] > 16.0 ? ObjectClass::Pedestrian : ObjectClass::Car;
  };
  const auto imp = permutation_importance(by_var_y, ds, 10, 3);
  EXPECT_GT(imp[1].mean, 0.2);
  for (int f : {0, 2, 3}) {
    EXPECT_EQ(imp[f].mean, 0.0);
    EXPECT_EQ(imp[f].std, 0.0);
  }
}

TEST(PermutationImportance, ConstantColumnIsExactlyZero) {
  auto ds = synth_dataset(40, 5);
  for (auto& r : ds.rows) r.features.var_x = 7.0;
  const auto model = svm_train(ds);
  const auto imp = permutation_importance(model, ds, 8, 1);
  EXPECT_EQ(imp[static_cast<int>(Feature::VarX)].mean, 0.0);
  EXPECT_EQ(imp[static_cast<int>(Feature::VarX)].std, 0.0);
}

TEST(PermutationImportance, ZeroWeightFeatureStaysWithinNoise) {
  const auto ds = synth_dataset(60, 7);
  auto model = svm_train(ds);
  model.weights[static_cast<int>(Feature::TopY)] = 0.0;
  const auto imp = permutation_importance(model, ds, 10, 2);
  const auto& t = imp[static_cast<int>(Feature::TopY)];
  EXPECT_LE(std::abs(t.mean), 2.0 * t.std + 1e-12);
}

TEST(PermutationImportance, StdIsPopulationStd) {
  // Two-row dataset: each shuffle either keeps or swaps the rows, so drops
  // are 0 or 1 and the population std follows from their counts.
  LabeledDataset ds;
  ds.rows.push_back({{0, 0, 0, 0}, ObjectClass::Car});
  ds.rows.push_back({{1, 0, 0, 0}, ObjectClass::Pedestrian});
  auto by_area = [](const FeatureArray& f) {
    return f[0] > 0.5 ? ObjectClass::Pedestrian : ObjectClass::Car;
  };
  const auto imp = permutation_importance(by_area, ds, 40, 11);
  const double p = imp[0].mean;
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  EXPECT_NEAR(imp[0].std, std::sqrt(p * (1.0 - p)), 1e-12);
}

TEST(AleSecondOrder, LinearModelHasNoInteraction) {
  const auto ds = synth_dataset(132, 1);
  const auto model = svm_train(ds);
  const auto g = ale_second_order(model, ds, Feature::Area, Feature::VarY);
  ASSERT_EQ(g.values.size(), 10u);
  ASSERT_EQ(g.edges_f1.size(), 11u);
  for (std::size_t k = 0; k < 10; ++k)
    for (std::size_t l = 0; l < 10; ++l)
      if (g.counts[k][l] > 0) {
        EXPECT_LE(std::abs(g.values[k][l]), 1e-6);
      }
}

LabeledDataset lattice(int n) {
  LabeledDataset ds;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      ds.rows.push_back({{3.0 * a, 0.5 * b, 1.0, 20.0}, ObjectClass::Car});
  return ds;
}

TEST(AleSecondOrder, ProductInteractionMatchesClosedForm) {
  const double c = 0.7;
  auto product = [c](const FeatureArray& f) { return c * f[0] * f[1] + 2.0 * f[0] - f[1]; };
  const auto ds = lattice(20);
  const auto g = ale_second_order(product, ds, Feature::Area, Feature::VarY, 10);
  for (const auto& row : g.counts)
    for (auto n : row) ASSERT_EQ(n, 4u);

  const auto& z1 = g.edges_f1;
  const auto& z2 = g.edges_f2;
  // The mixed difference of a bilinear term is exact, so the accumulated
  // surface is c * (z1 - z1[0]) * (z2 - z2[0]) at the corners.
  for (std::size_t k = 0; k <= 10; ++k)
    for (std::size_t l = 0; l <= 10; ++l)
      EXPECT_NEAR(g.uncentered[k][l], c * (z1[k] - z1[0]) * (z2[l] - z2[0]), 1e-9);

  // With equal cell counts the centered surface is c * (m1 - mu1) * (m2 - mu2)
  // over the cell midpoints.
  std::vector<double> m1(10), m2(10);
  double mu1 = 0, mu2 = 0;
  for (int k = 0; k < 10; ++k) {
    m1[k] = 0.5 * (z1[k] + z1[k + 1]);
    m2[k] = 0.5 * (z2[k] + z2[k + 1]);
    mu1 += m1[k] / 10;
    mu2 += m2[k] / 10;
  }
  for (int k = 0; k < 10; ++k)
    for (int l = 0; l < 10; ++l)
      EXPECT_NEAR(g.values[k][l], c * (m1[k] - mu1) * (m2[l] - mu2), 1e-9);
}

TEST(AleSecondOrder, ScalesWithInteractionStrength) {
  const auto ds = lattice(12);
  auto make = [](double c) {
    return [c](const FeatureArray& f) { return c * f[0] * f[1]; };
  };
  const auto g1 = ale_second_order(make(1.0), ds, Feature::Area, Feature::VarY, 6);
  const auto g3 = ale_second_order(make(3.0), ds, Feature::Area, Feature::VarY, 6);
  for (int k = 0; k < 6; ++k)
    for (int l = 0; l < 6; ++l) EXPECT_NEAR(g3.values[k][l], 3.0 * g1.values[k][l], 1e-9);
}

TEST(AleSecondOrder, EmptyCellsBorrowTheNearestPopulatedCell) {
  // Points on the diagonal: with two bins only the diagonal cells are
  // populated. Both empty cells are equidistant from the two diagonal cells
  // and take the lower-index one, cell (0,0).
  LabeledDataset ds;
  for (int i = 0; i < 4; ++i) ds.rows.push_back({{double(i), double(i), 0, 0}, ObjectClass::Car});
  auto piecewise = [](const FeatureArray& f) {
    return (f[0] <= 1.5 ? 1.0 : 3.0) * f[0] * f[1];
  };
  const auto g = ale_second_order(piecewise, ds, Feature::Area, Feature::VarY, 2);
  ASSERT_EQ(g.edges_f1, (std::vector<double>{0.0, 1.5, 3.0}));
  EXPECT_EQ(g.counts[0][1], 0u);
  EXPECT_EQ(g.counts[1][0], 0u);
  // Local effects: (0,0) = 2.25, (1,1) = 27 - 4.5 - 13.5 + 2.25 = 11.25.
  EXPECT_NEAR(g.uncentered[1][1], 2.25, 1e-12);
  EXPECT_NEAR(g.uncentered[1][2], 4.5, 1e-12);
  EXPECT_NEAR(g.uncentered[2][1], 4.5, 1e-12);
  EXPECT_NEAR(g.uncentered[2][2], 18.0, 1e-12);
}

TEST(AleSecondOrder, BinningConvention) {
  const std::vector<double> edges{0.0, 1.0, 2.0, 3.0};
  EXPECT_EQ(detail::bin_of(edges, 0.0), 0);
  EXPECT_EQ(detail::bin_of(edges, 1.0), 0);
  EXPECT_EQ(detail::bin_of(edges, 1.0000001), 1);
  EXPECT_EQ(detail::bin_of(edges, 3.0), 2);
  EXPECT_EQ(detail::bin_of(edges, 99.0), 2);
  EXPECT_EQ(detail::quantile_edges({4, 1, 3, 2}, 2), (std::vector<double>{1.0, 2.5, 4.0}));
}

TEST(AleSecondOrder, RejectsBadArguments) {
  const auto ds = lattice(4);
  const SvmModel m;
  EXPECT_THROW(ale_second_order(m, ds, Feature::Area, Feature::Area), ValidationError);
  EXPECT_THROW(ale_second_order(m, LabeledDataset{}, Feature::Area, Feature::VarY),
               ValidationError);
}

}  // namespace
}  // namespace svs
