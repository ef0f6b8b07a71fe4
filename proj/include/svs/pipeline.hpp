// End-to-end orchestration: sequence loading, sensor simulation, detection,
// classification, tracking, evaluation, operation counting and analysis
// output.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "svs/dataset.hpp"
#include "svs/detector.hpp"
#include "svs/explain.hpp"
#include "svs/netpbm.hpp"
#include "svs/sensor.hpp"
#include "svs/svm.hpp"
#include "svs/tracker.hpp"

namespace svs {

namespace fs = std::filesystem;

inline constexpr int kConfigVersion = 1;

struct PipelineConfig {
  SensorConfig sensor;
  DetectorConfig detector;
  TrackerConfig tracker;
  std::string model_path;
  std::uint64_t seed = 1;
  bool continuous = false;  // bypass alarm gating and process every frame

  void validate() const {
    sensor.validate();
    detector.validate();
    tracker.validate();
  }
};

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["version"] = kConfigVersion;
  j["sensor"] = {{"alpha", c.sensor.alpha},         {"theta", c.sensor.theta},
                 {"erosion_k", c.sensor.erosion_k}, {"min_run_x", c.sensor.min_run_x},
                 {"min_run_y", c.sensor.min_run_y}, {"burst_len", c.sensor.burst_len}};
  j["detector"] = {{"tau", c.detector.tau}, {"min_area", c.detector.min_area}};
  const auto& k = c.tracker.kalman;
  j["tracker"] = {{"n_hits", c.tracker.n_hits},
                  {"t_lost", c.tracker.t_lost},
                  {"iou_min", c.tracker.iou_min},
                  {"q_pos", k.q_pos},
                  {"q_vel", k.q_vel},
                  {"r", k.r},
                  {"p0_pos", k.p0_pos},
                  {"p0_vel", k.p0_vel}};
  j["model_path"] = c.model_path;
  j["seed"] = c.seed;
  j["continuous"] = c.continuous;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  auto check_keys = [](const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!obj.is_object()) throw ValidationError("config: " + where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        throw ValidationError("config: unknown key '" + where + "." + key + "'");
    }
  };
  try {
    check_keys(j, {"version", "sensor", "detector", "tracker", "model_path", "seed", "continuous"},
               "<root>");
    if (j.value("version", kConfigVersion) != kConfigVersion)
      throw ValidationError("config: unsupported version");
    PipelineConfig c;
    if (j.contains("sensor")) {
      const auto& s = j["sensor"];
      check_keys(s, {"alpha", "theta", "erosion_k", "min_run_x", "min_run_y", "burst_len"},
                 "sensor");
      c.sensor.alpha = s.value("alpha", c.sensor.alpha);
      c.sensor.theta = s.value("theta", c.sensor.theta);
      c.sensor.erosion_k = s.value("erosion_k", c.sensor.erosion_k);
      c.sensor.min_run_x = s.value("min_run_x", c.sensor.min_run_x);
      c.sensor.min_run_y = s.value("min_run_y", c.sensor.min_run_y);
      c.sensor.burst_len = s.value("burst_len", c.sensor.burst_len);
    }
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      check_keys(d, {"tau", "min_area"}, "detector");
      c.detector.tau = d.value("tau", c.detector.tau);
      c.detector.min_area = d.value("min_area", c.detector.min_area);
    }
    if (j.contains("tracker")) {
      const auto& t = j["tracker"];
      check_keys(t, {"n_hits", "t_lost", "iou_min", "q_pos", "q_vel", "r", "p0_pos", "p0_vel"},
                 "tracker");
      auto& k = c.tracker.kalman;
      c.tracker.n_hits = t.value("n_hits", c.tracker.n_hits);
      c.tracker.t_lost = t.value("t_lost", c.tracker.t_lost);
      c.tracker.iou_min = t.value("iou_min", c.tracker.iou_min);
      k.q_pos = t.value("q_pos", k.q_pos);
      k.q_vel = t.value("q_vel", k.q_vel);
      k.r = t.value("r", k.r);
      k.p0_pos = t.value("p0_pos", k.p0_pos);
      k.p0_vel = t.value("p0_vel", k.p0_vel);
    }
    c.model_path = j.value("model_path", c.model_path);
    c.seed = j.value("seed", c.seed);
    c.continuous = j.value("continuous", c.continuous);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline void write_text_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("ground truth must be an object");
  GroundTruth gt;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
      throw ValidationError("ground truth: '" + key + "' must be a non-negative integer");
    gt.counts[static_cast<std::size_t>(parse_class(key))] = value.get<std::int64_t>();
  }
  return gt;
}

inline nlohmann::ordered_json to_json(const GroundTruth& gt) {
  return {{"car", gt[ObjectClass::Car]}, {"pedestrian", gt[ObjectClass::Pedestrian]}};
}

struct Sequence {
  std::vector<GrayFrame> frames;
  std::vector<std::string> names;
};

/// All *.pgm files in lexicographic order; all must share one size, VGA or
/// QQVGA.
inline Sequence load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  if (files.empty()) throw ValidationError(dir.string() + ": no .pgm frames found");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  Sequence seq;
  for (const auto& f : files) {
    GrayFrame frame = netpbm::read_pgm(f);
    if (!frame.is_vga() && !frame.is_qqvga())
      throw ValidationError(f.string() + ": frame must be 640x480 or 160x120");
    if (!seq.frames.empty() && (frame.rows() != seq.frames.front().rows() ||
                                frame.cols() != seq.frames.front().cols()))
      throw ValidationError(f.string() + ": frame size differs from " + seq.names.front());
    seq.frames.push_back(std::move(frame));
    seq.names.push_back(f.filename().string());
  }
  return seq;
}

inline void save_sequence(const fs::path& dir, const std::vector<GrayFrame>& frames) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::ostringstream name;
    name << "frame_" << std::setw(5) << std::setfill('0') << i << ".pgm";
    netpbm::write_pgm(dir / name.str(), frames[i]);
  }
}

enum class Stage { Projection = 0, Proposal, Filter, Classify, ConnectedComponents };
inline constexpr std::size_t kNumStages = 5;
inline constexpr std::array<std::string_view, kNumStages> kStageNames{
    "projection", "proposal", "filter", "classify", "connected_components"};

struct OpCountReport {
  struct FrameOps {
    std::int64_t frame = 0;
    std::array<OpCounts, kNumStages> stages{};
    OpCounts total() const {
      OpCounts t;
      for (const auto& s : stages) t += s;
      return t;
    }
  };

  std::vector<FrameOps> frames;

  OpCounts stage_total(Stage s) const {
    OpCounts t;
    for (const auto& f : frames) t += f.stages[static_cast<std::size_t>(s)];
    return t;
  }
  OpCounts total() const {
    OpCounts t;
    for (const auto& f : frames) t += f.total();
    return t;
  }
  /// Operations of the projection detector excluding the projections
  /// themselves, which the sensor delivers.
  std::uint64_t detect_ops() const {
    return stage_total(Stage::Proposal).total() + stage_total(Stage::Filter).total();
  }
  std::uint64_t cc_ops() const { return stage_total(Stage::ConnectedComponents).total(); }
};

inline nlohmann::ordered_json to_json(const OpCounts& o) {
  return {{"comparisons", o.comparisons},
          {"arithmetic", o.arithmetic},
          {"memory", o.memory},
          {"total", o.total()}};
}

inline nlohmann::ordered_json to_json(const OpCountReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json stages;
  for (std::size_t s = 0; s < kNumStages; ++s)
    stages[std::string(kStageNames[s])] = to_json(r.stage_total(static_cast<Stage>(s)));
  j["stages"] = stages;
  j["total"] = to_json(r.total());
  j["detect_ops"] = r.detect_ops();
  j["connected_components_ops"] = r.cc_ops();
  if (r.cc_ops() > 0)
    j["detect_to_cc_ratio"] = static_cast<double>(r.detect_ops()) / static_cast<double>(r.cc_ops());
  nlohmann::ordered_json per_frame = nlohmann::ordered_json::array();
  for (const auto& f : r.frames) {
    nlohmann::ordered_json fj;
    fj["frame"] = f.frame;
    for (std::size_t s = 0; s < kNumStages; ++s)
      fj[std::string(kStageNames[s])] = f.stages[s].total();
    fj["total"] = f.total().total();
    per_frame.push_back(fj);
  }
  j["frames"] = per_frame;
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& rep) {
  nlohmann::ordered_json j;
  for (ObjectClass c : {ObjectClass::Car, ObjectClass::Pedestrian}) {
    const auto& e = rep[c];
    nlohmann::ordered_json cj;
    cj["n_true"] = e.n_true;
    cj["n_tracked"] = e.n_tracked;
    cj["error"] = e.error ? nlohmann::ordered_json(*e.error) : nlohmann::ordered_json(nullptr);
    j[std::string(class_name(c))] = cj;
  }
  j["count_accuracy"] = rep.count_accuracy();
  return j;
}

/// Instrumented classification of one feature vector.
inline Prediction classify_counted(const SvmModel& model, const FeatureVec& f, OpCounts& ops) {
  ops.memory += kNumFeatures * 4 + 1;
  ops.arithmetic += kNumFeatures * 4;
  ops.comparisons += kNumFeatures * 2 + 1;
  return svm_predict(model, f);
}

struct PipelineResult {
  ClassCounter counts;
  std::optional<EvalReport> report;
  std::vector<TrackEvent> events;
  OpCountReport ops;
  int alarms = 0;
  int delivered = 0;

  std::string event_log() const {
    std::string out;
    for (const auto& e : events) out += to_json(e).dump() + "\n";
    return out;
  }
};

/// Sensor ticks over the sequence; every delivered frame goes through
/// detection, classification and tracking. Frames are numbered by their
/// index in the input sequence.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const SvmModel& model,
                                   const std::vector<GrayFrame>& frames,
                                   const std::optional<GroundTruth>& gt = std::nullopt) {
  cfg.validate();
  model.validate();
  PipelineResult res;
  SensorState sensor(cfg.sensor);
  Tracker tracker(cfg.tracker);

  auto process = [&](std::int64_t index, const MotionBitmap& bm) {
    OpCountReport::FrameOps fo;
    fo.frame = index;
    auto& st = fo.stages;
    const ProjectionPair pp = project(bm, &st[static_cast<std::size_t>(Stage::Projection)]);
    const auto blobs = detect_from_projections(bm, pp, cfg.detector,
                                               &st[static_cast<std::size_t>(Stage::Proposal)],
                                               &st[static_cast<std::size_t>(Stage::Filter)]);
    std::vector<Detection> dets;
    for (const auto& b : blobs) {
      const auto pred = classify_counted(model, extract_features(b),
                                         st[static_cast<std::size_t>(Stage::Classify)]);
      dets.push_back({b, pred.cls});
    }
    auto ev = tracker.step(index, dets);
    res.events.insert(res.events.end(), ev.begin(), ev.end());
    res.ops.frames.push_back(fo);
  };

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& frame = frames[i];
    if (!frame.is_vga() && !frame.is_qqvga())
      throw ValidationError("run_pipeline: frame " + std::to_string(i) + " has unsupported size");
    if (i > 0 && (frame.rows() != frames[0].rows() || frame.cols() != frames[0].cols()))
      throw ValidationError("run_pipeline: mixed frame sizes in sequence");
    const auto index = static_cast<std::int64_t>(i);

    if (cfg.continuous) {
      const GrayFrame qq = frame.is_vga() ? subsample_qqvga(frame) : frame;
      process(index, erode(motion_step(sensor, qq), cfg.sensor.erosion_k));
      continue;
    }
    const SensorEvent ev = sensor_tick(sensor, frame);
    if (std::holds_alternative<AlarmRaised>(ev)) {
      ++res.alarms;
    } else if (const auto* d = std::get_if<FrameDelivered>(&ev)) {
      ++res.delivered;
      if (d->frame.is_vga()) {
        process(index, decode_lsb(d->frame).bitmap);
      } else {
        process(index, d->bitmap);
      }
    }
  }
  auto fin = tracker.finalize(static_cast<std::int64_t>(frames.size()));
  res.events.insert(res.events.end(), fin.begin(), fin.end());
  res.counts = tracker.counter();
  if (gt) res.report = evaluate(*gt, res.counts);
  return res;
}

struct BenchResult {
  OpCountReport ops;
  DetectionComparison comparison;
};

/// Per-frame motion bitmaps (no alarm gating) through both the projection
/// detector and the connected-components baseline, instrumented.
inline BenchResult bench(const PipelineConfig& cfg, const std::vector<GrayFrame>& frames) {
  cfg.validate();
  BenchResult res;
  SensorState sensor(cfg.sensor);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const GrayFrame qq = frames[i].is_vga() ? subsample_qqvga(frames[i]) : frames[i];
    const MotionBitmap bm = erode(motion_step(sensor, qq), cfg.sensor.erosion_k);
    OpCountReport::FrameOps fo;
    fo.frame = static_cast<std::int64_t>(i);
    auto& st = fo.stages;
    const ProjectionPair pp = project(bm, &st[static_cast<std::size_t>(Stage::Projection)]);
    const auto proposals = detect_from_projections(
        bm, pp, cfg.detector, &st[static_cast<std::size_t>(Stage::Proposal)],
        &st[static_cast<std::size_t>(Stage::Filter)]);
    const auto oracle =
        connected_components(bm, &st[static_cast<std::size_t>(Stage::ConnectedComponents)]);
    res.comparison += compare_detections(proposals, oracle);
    res.ops.frames.push_back(fo);
  }
  return res;
}

inline nlohmann::ordered_json to_json(const DetectionComparison& c) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  return {{"frames", c.frames},
          {"matched", c.matched},
          {"unmatched_proposals", c.unmatched_proposals},
          {"unmatched_oracle", c.unmatched_oracle},
          {"mean_iou", opt(c.mean_iou())},
          {"mean_area_ratio", opt(c.mean_area_ratio())},
          {"extra_per_frame", c.extra_per_frame()}};
}

struct AnalysisResult {
  std::array<Importance, kNumFeatures> importance{};
  AleGrid ale;
  double heldout_accuracy = 0.0;
};

inline std::string importance_csv(const std::array<Importance, kNumFeatures>& imp) {
  std::ostringstream os;
  os << std::setprecision(12) << "feature,mean,std\n";
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    os << kFeatureNames[i] << ',' << imp[i].mean << ',' << imp[i].std << '\n';
  return os.str();
}

inline std::string ale_grid_csv(const AleGrid& g) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << kFeatureNames[static_cast<std::size_t>(g.f1)] << "_bin";
  for (std::size_t l = 0; l < g.values.size(); ++l) os << ",b" << l;
  os << '\n';
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    os << k;
    for (double v : g.values[k]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

inline std::string ale_edges_csv(const AleGrid& g) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "index," << kFeatureNames[static_cast<std::size_t>(g.f1)] << ','
     << kFeatureNames[static_cast<std::size_t>(g.f2)] << '\n';
  for (std::size_t i = 0; i < g.edges_f1.size(); ++i)
    os << i << ',' << g.edges_f1[i] << ',' << g.edges_f2[i] << '\n';
  return os.str();
}

/// Permutation importance on a seeded 70/30 held-out split and the 10x10
/// area/var_y ALE surface on the full dataset. Writes importance.csv,
/// ale_grid.csv and ale_edges.csv when out_dir is given.
inline AnalysisResult emit_analysis(const SvmModel& model, const LabeledDataset& ds,
                                    std::uint64_t seed, const std::optional<fs::path>& out_dir,
                                    int repeats = 10) {
  model.validate();
  AnalysisResult res;
  const auto [train, test] = stratified_split(ds, 0.7, seed);
  res.heldout_accuracy = accuracy(model, test);
  res.importance = permutation_importance(model, test, repeats, seed);
  res.ale = ale_second_order(model, ds, Feature::Area, Feature::VarY, 10);
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_text_file(*out_dir / "importance.csv", importance_csv(res.importance));
    write_text_file(*out_dir / "ale_grid.csv", ale_grid_csv(res.ale));
    write_text_file(*out_dir / "ale_edges.csv", ale_edges_csv(res.ale));
  }
  return res;
}

/// Reference model: Pegasos on the train split of the 264-row synthetic set.
inline SvmModel train_reference_model(std::uint64_t seed = 1) {
  const auto ds = synth_dataset(132, seed);
  const auto [train, test] = stratified_split(ds, 0.7, seed);
  return svm_train(train, TrainParams{});
}

}  // namespace svs
