// Synthetic car/pedestrian feature datasets, CSV I/O and stratified splits.
#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "svs/svm.hpp"

namespace svs {

struct ClassShape {
  double var_y_mean, var_y_sd;
  double var_x_mean, var_x_sd;
  double area_mean, area_sd;
};

/// Generator parameters. Feature means are for an object at unit scale; the
/// scale grows linearly with top_y (lower in the frame means nearer and
/// larger) and multiplies every second-moment feature by scale^2.
struct SynthParams {
  ClassShape pedestrian{22.0, 3.0, 8.0, 3.0, 90.0, 20.0};
  ClassShape car{10.0, 3.0, 12.0, 4.0, 170.0, 30.0};
  double top_y_min = 15.0;
  double top_y_max = 95.0;
  double scale_near = 1.2;  // at top_y_max
  double scale_far = 0.8;   // at top_y_min
};

inline LabeledDataset synth_dataset(std::size_t n_per_class, std::uint64_t seed,
                                    const SynthParams& p = {}) {
  if (n_per_class < 2) throw ValidationError("synth_dataset: n_per_class must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> top(p.top_y_min, p.top_y_max);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double mean, double sd, double floor) {
    return std::max(floor, mean + sd * unit(rng));
  };

  LabeledDataset ds;
  ds.rows.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (ObjectClass cls : {ObjectClass::Car, ObjectClass::Pedestrian}) {
      const ClassShape& s = cls == ObjectClass::Car ? p.car : p.pedestrian;
      const double ty = std::floor(top(rng));
      const double t = (ty - p.top_y_min) / (p.top_y_max - p.top_y_min);
      const double scale = p.scale_far + t * (p.scale_near - p.scale_far);
      const double k = scale * scale;
      FeatureVec f;
      f.var_y = k * draw(s.var_y_mean, s.var_y_sd, 0.5);
      f.var_x = k * draw(s.var_x_mean, s.var_x_sd, 0.5);
      f.area = std::round(k * draw(s.area_mean, s.area_sd, 8.0));
      f.top_y = ty;
      ds.rows.push_back({f, cls});
    }
  }
  std::ostringstream prov;
  prov << "synth_dataset(n_per_class=" << n_per_class << ", seed=" << seed << ")";
  ds.provenance = prov.str();
  return ds;
}

/// Per-class seeded shuffle, first `train_fraction` of each class to train.
inline std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                                  double train_fraction,
                                                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("stratified_split: fraction must be in (0,1)");
  std::mt19937_64 rng(seed);
  LabeledDataset train, test;
  for (ObjectClass cls : {ObjectClass::Car, ObjectClass::Pedestrian}) {
    std::vector<LabeledRow> rows;
    for (const auto& r : ds.rows)
      if (r.label == cls) rows.push_back(r);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * rows.size()));
    train.rows.insert(train.rows.end(), rows.begin(), rows.begin() + n_train);
    test.rows.insert(test.rows.end(), rows.begin() + n_train, rows.end());
  }
  train.provenance = ds.provenance + " [train split]";
  test.provenance = ds.provenance + " [test split]";
  return {std::move(train), std::move(test)};
}

inline std::string dataset_to_csv(const LabeledDataset& ds) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "area,var_y,var_x,top_y,label\n";
  for (const auto& r : ds.rows) {
    const auto& f = r.features;
    os << f.area << ',' << f.var_y << ',' << f.var_x << ',' << f.top_y << ','
       << class_name(r.label) << '\n';
  }
  return os.str();
}

inline LabeledDataset dataset_from_csv(std::istream& in, const std::string& source = "csv") {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "area,var_y,var_x,top_y,label")
    throw ValidationError(source + ": header must be area,var_y,var_x,top_y,label");
  LabeledDataset ds;
  ds.provenance = source;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5)
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected 5 columns");
    FeatureArray a{};
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      std::size_t used = 0;
      try {
        a[i] = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[i].size())
        throw ValidationError(source + ":" + std::to_string(lineno) + ": bad number '" + cells[i] +
                              "'");
    }
    ds.rows.push_back({FeatureVec::from_array(a), parse_class(cells[4])});
  }
  return ds;
}

inline LabeledDataset read_dataset(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  return dataset_from_csv(in, p.string());
}

inline void write_dataset(const std::filesystem::path& p, const LabeledDataset& ds) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << dataset_to_csv(ds);
}

}  // namespace svs
