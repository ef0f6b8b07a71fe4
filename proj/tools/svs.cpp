// svs: command-line front end for the sensor / detector / tracker pipeline.
#include <cstdio>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "svs/svs.hpp"

using namespace svs;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "JSON pipeline config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "RNG seed (overrides config)");
  auto* out = cmd->add_option("--out", c.out, "output directory");
  if (out_required) out->required();
}

PipelineConfig load_config(const Common& c) {
  PipelineConfig cfg;
  if (!c.config.empty()) cfg = pipeline_config_from_json(read_json_file(c.config));
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

SvmModel load_model(const std::string& cli_path, const PipelineConfig& cfg) {
  const std::string path = cli_path.empty() ? cfg.model_path : cli_path;
  if (path.empty()) throw ValidationError("no model given (--model or model_path in config)");
  return svm_model_from_json(read_json_file(path));
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::string frame_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.%s", stem, i, ext);
  return buf;
}

std::vector<Scene> scenes_named(const std::string& name) {
  if (name == "all") return all_scenes();
  for (const auto& s : all_scenes())
    if (s.name == name) return {s};
  throw ValidationError("unknown scene '" + name + "'");
}

// scene: render synthetic sequences with ground truth.
int cmd_scene(const Common& c, const std::string& name, bool vga) {
  const fs::path out = c.out;
  for (auto s : scenes_named(name)) {
    if (c.seed) s.seed = *c.seed;
    const fs::path dir = out / s.name;
    save_sequence(dir / "frames", render_sequence(s, vga));
    write_text_file(dir / "gt.json", dump(to_json(s.ground_truth())));
    std::cout << s.name << ": " << s.frames << " frames -> " << dir.string() << "\n";
  }
  return 0;
}

// simulate: the sensor alone. Writes the bitmap of every delivered frame as
// P4, the delivered frame itself as P5, and a JSON-lines sensor log.
int cmd_simulate(const Common& c, const std::string& in) {
  const auto cfg = load_config(c);
  const auto seq = load_sequence(in);
  const fs::path out = c.out;
  fs::create_directories(out / "bitmaps");
  fs::create_directories(out / "delivered");
  SensorState sensor(cfg.sensor);
  std::string log;
  int alarms = 0, delivered = 0;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto ev = sensor_tick(sensor, seq.frames[i]);
    nlohmann::ordered_json j;
    j["frame"] = i;
    if (const auto* a = std::get_if<AlarmRaised>(&ev)) {
      ++alarms;
      j["event"] = "alarm";
      j["hot_pixels"] = a->bitmap.popcount();
    } else if (const auto* d = std::get_if<FrameDelivered>(&ev)) {
      ++delivered;
      j["event"] = "delivered";
      j["hot_pixels"] = d->bitmap.popcount();
      netpbm::write_pbm(out / "bitmaps" / frame_name("bitmap", i, "pbm"), d->bitmap);
      netpbm::write_pgm(out / "delivered" / frame_name("frame", i, "pgm"), d->frame);
    } else {
      continue;
    }
    log += j.dump() + "\n";
  }
  write_text_file(out / "sensor.jsonl", log);
  std::cout << seq.frames.size() << " frames, " << alarms << " alarms, " << delivered
            << " delivered\n";
  return 0;
}

// detect: projection detector on P4 bitmaps, plus the component baseline.
int cmd_detect(const Common& c, const std::string& in) {
  const auto cfg = load_config(c);
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& e : fs::directory_iterator(in))
      if (e.path().extension() == ".pbm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(in);
  }
  if (files.empty()) throw ValidationError(in + ": no .pbm files");
  const fs::path out = c.out;
  fs::create_directories(out);
  std::string log;
  DetectionComparison total;
  auto blob_json = [](const Blob& b) {
    nlohmann::ordered_json j;
    j["box"] = {b.box.x0, b.box.y0, b.box.x1, b.box.y1};
    j["area"] = b.moments.m00;
    j["cx"] = b.moments.cx;
    j["cy"] = b.moments.cy;
    j["var_x"] = b.moments.var_x;
    j["var_y"] = b.moments.var_y;
    return j;
  };
  for (const auto& f : files) {
    const auto bm = netpbm::read_pbm(f);
    const auto props = detect(bm, cfg.detector);
    const auto oracle = connected_components(bm);
    total += compare_detections(props, oracle);
    nlohmann::ordered_json j;
    j["file"] = f.filename().string();
    j["detections"] = nlohmann::ordered_json::array();
    for (const auto& b : props) j["detections"].push_back(blob_json(b));
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& b : oracle) j["components"].push_back(blob_json(b));
    log += j.dump() + "\n";
  }
  write_text_file(out / "detections.jsonl", log);
  write_text_file(out / "comparison.json", dump(to_json(total)));
  std::cout << files.size() << " bitmaps, " << total.matched << " matched, extra/frame "
            << total.extra_per_frame() << "\n";
  return 0;
}

// run: full pipeline on a P5 sequence.
int cmd_run(const Common& c, const std::string& in, const std::string& model_path,
            const std::string& gt_path, bool continuous) {
  auto cfg = load_config(c);
  if (continuous) cfg.continuous = true;
  const auto model = load_model(model_path, cfg);
  const auto seq = load_sequence(in);
  std::optional<GroundTruth> gt;
  if (!gt_path.empty()) gt = ground_truth_from_json(read_json_file(gt_path));

  const auto res = run_pipeline(cfg, model, seq.frames, gt);
  const fs::path out = c.out;
  fs::create_directories(out);
  write_text_file(out / "events.jsonl", res.event_log());

  nlohmann::ordered_json rep;
  rep["version"] = 1;
  rep["frames"] = seq.frames.size();
  rep["alarms"] = res.alarms;
  rep["delivered"] = res.delivered;
  rep["counts"] = {{"car", res.counts[ObjectClass::Car]},
                   {"pedestrian", res.counts[ObjectClass::Pedestrian]}};
  if (res.report) rep["evaluation"] = to_json(*res.report);
  auto ops = to_json(res.ops);
  ops.erase("frames");
  rep["ops"] = ops;
  write_text_file(out / "report.json", dump(rep));
  write_text_file(out / "config.json", dump(to_json(cfg)));

  std::cout << "car " << res.counts[ObjectClass::Car] << ", pedestrian "
            << res.counts[ObjectClass::Pedestrian];
  if (res.report) std::cout << ", count accuracy " << res.report->count_accuracy();
  std::cout << "\n";
  return 0;
}

// train: linear SVM on a CSV dataset, or on a freshly synthesized one.
int cmd_train(const Common& c, const std::string& data, std::size_t n_per_class,
              TrainParams params) {
  const auto cfg = load_config(c);
  const fs::path out = c.out;
  fs::create_directories(out);
  LabeledDataset ds;
  if (data.empty()) {
    ds = synth_dataset(n_per_class, cfg.seed);
    write_dataset(out / "dataset.csv", ds);
  } else {
    ds = read_dataset(data);
  }
  params.seed = cfg.seed;
  const auto [train, test] = stratified_split(ds, 0.7, cfg.seed);
  const auto model = svm_train(train, params);
  write_text_file(out / "model.json", to_json(model).dump(2) + "\n");

  nlohmann::ordered_json rep;
  rep["dataset"] = ds.provenance;
  rep["rows"] = ds.rows.size();
  rep["train_rows"] = train.rows.size();
  rep["test_rows"] = test.rows.size();
  rep["train_accuracy"] = accuracy(model, train);
  rep["heldout_accuracy"] = accuracy(model, test);
  rep["lambda"] = params.lambda;
  rep["epochs"] = params.epochs;
  rep["batch_size"] = params.batch_size;
  rep["seed"] = cfg.seed;
  write_text_file(out / "train_report.json", dump(rep));
  std::cout << "held-out accuracy " << accuracy(model, test) << " on " << test.rows.size()
            << " rows\n";
  return 0;
}

// explain: permutation importance and the area/var_y ALE surface.
int cmd_explain(const Common& c, const std::string& model_path, const std::string& data,
                int repeats) {
  const auto cfg = load_config(c);
  const auto model = load_model(model_path, cfg);
  const auto ds = data.empty() ? synth_dataset(132, cfg.seed) : read_dataset(data);
  const auto res = emit_analysis(model, ds, cfg.seed, fs::path(c.out), repeats);
  for (std::size_t f = 0; f < kNumFeatures; ++f)
    std::cout << kFeatureNames[f] << " " << res.importance[f].mean << " +- "
              << res.importance[f].std << "\n";
  return 0;
}

// bench: op counts of projection detection vs connected components.
int cmd_bench(const Common& c, const std::vector<std::string>& inputs) {
  const auto cfg = load_config(c);
  const fs::path out = c.out;
  fs::create_directories(out);
  std::vector<std::pair<std::string, std::vector<GrayFrame>>> seqs;
  if (inputs.empty()) {
    for (const auto& s : urban_suite()) seqs.emplace_back(s.name, render_sequence(s));
  } else {
    for (const auto& in : inputs)
      seqs.emplace_back(fs::path(in).filename().string(), load_sequence(in).frames);
  }

  nlohmann::ordered_json rep;
  rep["version"] = 1;
  rep["sequences"] = nlohmann::ordered_json::array();
  std::uint64_t det = 0, cc = 0;
  std::string csv = "sequence,frame";
  for (auto name : kStageNames) csv += "," + std::string(name);
  csv += ",total\n";
  DetectionComparison cmp;
  for (const auto& [name, frames] : seqs) {
    const auto r = bench(cfg, frames);
    det += r.ops.detect_ops();
    cc += r.ops.cc_ops();
    cmp += r.comparison;
    nlohmann::ordered_json sj;
    sj["name"] = name;
    auto ops = to_json(r.ops);
    ops.erase("frames");
    sj["ops"] = ops;
    sj["comparison"] = to_json(r.comparison);
    rep["sequences"].push_back(sj);
    for (const auto& f : r.ops.frames) {
      csv += name + "," + std::to_string(f.frame);
      for (const auto& s : f.stages) csv += "," + std::to_string(s.total());
      csv += "," + std::to_string(f.total().total()) + "\n";
    }
  }
  rep["detect_ops"] = det;
  rep["connected_components_ops"] = cc;
  const double ratio = cc ? static_cast<double>(det) / static_cast<double>(cc) : 0.0;
  rep["detect_to_cc_ratio"] = ratio;
  rep["comparison"] = to_json(cmp);
  write_text_file(out / "bench.json", dump(rep));
  write_text_file(out / "ops.csv", csv);
  std::cout << "detect/cc op ratio " << ratio << " over " << seqs.size() << " sequences\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svs: event-driven smart-camera pipeline"};
  app.require_subcommand(1);

  Common common;
  std::string in, model, gt, data, scene_name = "all";
  bool continuous = false, vga = false;
  std::size_t n_per_class = 132;
  int repeats = 10;
  TrainParams tp;
  std::vector<std::string> bench_inputs;

  auto* scene = app.add_subcommand("scene", "render synthetic test sequences");
  add_common(scene, common);
  scene->add_option("--name", scene_name, "scene name or 'all'");
  scene->add_flag("--vga", vga, "write 640x480 frames");

  auto* simulate = app.add_subcommand("simulate", "run the sensor model over a P5 sequence");
  add_common(simulate, common);
  simulate->add_option("--in", in, "directory of .pgm frames")->required();

  auto* detect_cmd = app.add_subcommand("detect", "detect blobs in P4 bitmaps");
  add_common(detect_cmd, common);
  detect_cmd->add_option("--in", in, ".pbm file or directory")->required();

  auto* run = app.add_subcommand("run", "full pipeline with optional evaluation");
  add_common(run, common);
  run->add_option("--in", in, "directory of .pgm frames")->required();
  run->add_option("--model", model, "model JSON (else config model_path)");
  run->add_option("--gt", gt, "ground-truth JSON");
  run->add_flag("--continuous", continuous, "process every frame, ignore alarms");

  auto* train = app.add_subcommand("train", "train the linear SVM");
  add_common(train, common);
  train->add_option("--data", data, "CSV dataset (default: synthesize)");
  train->add_option("--n-per-class", n_per_class, "rows per class when synthesizing")
      ->check(CLI::Range(2, 1000000));
  train->add_option("--lambda", tp.lambda, "regularization")->check(CLI::PositiveNumber);
  train->add_option("--epochs", tp.epochs, "epochs")->check(CLI::Range(1, 10000000));
  train->add_option("--batch-size", tp.batch_size, "mini-batch size, 0 = full batch");

  auto* explain = app.add_subcommand("explain", "permutation importance and ALE CSVs");
  add_common(explain, common);
  explain->add_option("--model", model, "model JSON (else config model_path)");
  explain->add_option("--data", data, "CSV dataset (default: synthesize)");
  explain->add_option("--repeats", repeats, "shuffles per feature")->check(CLI::Range(2, 10000));

  auto* bench_cmd = app.add_subcommand("bench", "operation counts vs component labeling");
  add_common(bench_cmd, common);
  bench_cmd->add_option("--in", bench_inputs, "sequence directories (default: synthetic suite)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*scene) return cmd_scene(common, scene_name, vga);
    if (*simulate) return cmd_simulate(common, in);
    if (*detect_cmd) return cmd_detect(common, in);
    if (*run) return cmd_run(common, in, model, gt, continuous);
    if (*train) return cmd_train(common, data, n_per_class, tp);
    if (*explain) return cmd_explain(common, model, data, repeats);
    if (*bench_cmd) return cmd_bench(common, bench_inputs);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
