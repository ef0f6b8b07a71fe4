// Multi-object tracker: Kalman prediction, IoU-distance Hungarian
// association with gating, hit/miss lifecycle, per-track class voting and a
// per-class counter of exited confirmed tracks.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "svs/detector.hpp"
#include "svs/hungarian.hpp"
#include "svs/kalman.hpp"
#include "svs/svm.hpp"

namespace svs {

struct TrackerConfig {
  int n_hits = 6;
  int t_lost = 1;
  double iou_min = 0.3;
  KalmanParams kalman;

  void validate() const {
    if (n_hits < 1) throw ValidationError("tracker.n_hits must be >= 1");
    if (t_lost < 0) throw ValidationError("tracker.t_lost must be >= 0");
    if (!(iou_min > 0.0 && iou_min < 1.0)) throw ValidationError("tracker.iou_min must be in (0,1)");
    kalman.validate();
  }
};

enum class TrackStatus { Tentative, Active, Deleted };

struct Track {
  std::int64_t id = 0;
  KalmanState kstate;
  TrackStatus status = TrackStatus::Tentative;
  int hit_streak = 0;
  int miss_count = 0;
  std::array<int, kNumClasses> class_votes{};
  std::optional<ObjectClass> last_vote;
  BoundingBox last_box;       // last associated detection
  BoundingBox predicted_box;  // box from the most recent predict step

  void vote(ObjectClass c) {
    ++class_votes[static_cast<std::size_t>(c)];
    last_vote = c;
  }
};

/// Majority class; a tie goes to the most recent vote.
inline ObjectClass vote_class(const Track& t) {
  if (!t.last_vote) throw ValidationError("vote_class: track has no votes");
  const int car = t.class_votes[static_cast<std::size_t>(ObjectClass::Car)];
  const int ped = t.class_votes[static_cast<std::size_t>(ObjectClass::Pedestrian)];
  if (car == ped) return *t.last_vote;
  return ped > car ? ObjectClass::Pedestrian : ObjectClass::Car;
}

/// (n_true - n_tracked) / n_true.
inline double eval_error(std::int64_t n_true, std::int64_t n_tracked) {
  if (n_true <= 0) throw ValidationError("eval_error: n_true must be >= 1");
  if (n_tracked < 0) throw ValidationError("eval_error: n_tracked must be >= 0");
  return static_cast<double>(n_true - n_tracked) / static_cast<double>(n_true);
}

struct ClassCounter {
  std::array<std::int64_t, kNumClasses> counts{};
  std::int64_t operator[](ObjectClass c) const { return counts[static_cast<std::size_t>(c)]; }
  void increment(ObjectClass c) { ++counts[static_cast<std::size_t>(c)]; }
};

struct ClassEval {
  std::int64_t n_true = 0;
  std::int64_t n_tracked = 0;
  std::optional<double> error;  // absent when n_true == 0
};

struct EvalReport {
  std::array<ClassEval, kNumClasses> classes{};

  const ClassEval& operator[](ObjectClass c) const { return classes[static_cast<std::size_t>(c)]; }

  /// 1 - sum|n_true - n_tracked| / sum n_true, floored at 0.
  double count_accuracy() const {
    std::int64_t diff = 0, total = 0;
    for (const auto& c : classes) {
      diff += c.n_true > c.n_tracked ? c.n_true - c.n_tracked : c.n_tracked - c.n_true;
      total += c.n_true;
    }
    if (total == 0) return diff == 0 ? 1.0 : 0.0;
    return std::max(0.0, 1.0 - static_cast<double>(diff) / static_cast<double>(total));
  }
};

struct GroundTruth {
  std::array<std::int64_t, kNumClasses> counts{};
  std::int64_t operator[](ObjectClass c) const { return counts[static_cast<std::size_t>(c)]; }
};

inline EvalReport evaluate(const GroundTruth& gt, const ClassCounter& counter) {
  EvalReport rep;
  for (ObjectClass c : {ObjectClass::Car, ObjectClass::Pedestrian}) {
    auto& e = rep.classes[static_cast<std::size_t>(c)];
    e.n_true = gt[c];
    e.n_tracked = counter[c];
    if (e.n_true > 0) e.error = eval_error(e.n_true, e.n_tracked);
  }
  return rep;
}

enum class TrackEventKind { Spawn, Promote, Match, Miss, Delete, Count };

inline std::string_view event_name(TrackEventKind k) {
  switch (k) {
    case TrackEventKind::Spawn: return "spawn";
    case TrackEventKind::Promote: return "promote";
    case TrackEventKind::Match: return "match";
    case TrackEventKind::Miss: return "miss";
    case TrackEventKind::Delete: return "delete";
    case TrackEventKind::Count: return "count";
  }
  return "?";
}

struct TrackEvent {
  std::int64_t frame = 0;
  TrackEventKind kind = TrackEventKind::Spawn;
  std::int64_t track_id = 0;
  std::optional<ObjectClass> cls;
  std::optional<BoundingBox> box;
};

inline nlohmann::ordered_json to_json(const TrackEvent& e) {
  nlohmann::ordered_json j;
  j["frame"] = e.frame;
  j["event"] = event_name(e.kind);
  j["track_id"] = e.track_id;
  if (e.cls) j["class"] = class_name(*e.cls);
  if (e.box) j["box"] = {e.box->x0, e.box->y0, e.box->x1, e.box->y1};
  return j;
}

struct Detection {
  Blob blob;
  ObjectClass cls = ObjectClass::Car;
};

/// cost[i][j] = 1 - iou(predicted box of track i, box of detection j).
inline CostMatrix cost_matrix(const std::vector<Track>& tracks, const std::vector<Detection>& dets) {
  CostMatrix m(tracks.size(), dets.size());
  for (std::size_t i = 0; i < tracks.size(); ++i)
    for (std::size_t j = 0; j < dets.size(); ++j)
      m(i, j) = 1.0 - iou(tracks[i].predicted_box, dets[j].blob.box);
  return m;
}

struct AssociationResult {
  Assignment matches;
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_dets;
};

/// Hungarian assignment on IoU distance; pairs below iou_min are split.
inline AssociationResult associate(const std::vector<Track>& tracks,
                                   const std::vector<Detection>& dets, double iou_min) {
  AssociationResult res;
  const CostMatrix cost = cost_matrix(tracks, dets);
  std::vector<bool> t_used(tracks.size(), false), d_used(dets.size(), false);
  for (const auto& [t, d] : hungarian(cost)) {
    if (1.0 - cost(t, d) < iou_min) continue;
    res.matches.emplace_back(t, d);
    t_used[t] = d_used[d] = true;
  }
  for (std::size_t t = 0; t < tracks.size(); ++t)
    if (!t_used[t]) res.unmatched_tracks.push_back(t);
  for (std::size_t d = 0; d < dets.size(); ++d)
    if (!d_used[d]) res.unmatched_dets.push_back(d);
  return res;
}

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const TrackerConfig& config() const { return cfg_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  const ClassCounter& counter() const { return counter_; }

  /// One frame: predict, associate, update matches, age misses, spawn.
  std::vector<TrackEvent> step(std::int64_t frame, const std::vector<Detection>& dets) {
    std::vector<TrackEvent> ev;
    for (auto& t : tracks_) {
      auto [ks, box] = kf_predict(t.kstate, cfg_.kalman);
      t.kstate = ks;
      t.predicted_box = box;
    }

    const auto assoc = associate(tracks_, dets, cfg_.iou_min);
    for (const auto& [ti, di] : assoc.matches) {
      Track& t = tracks_[ti];
      const Detection& d = dets[di];
      t.kstate = kf_update(t.kstate, d.blob.box, cfg_.kalman, frame);
      t.last_box = d.blob.box;
      ++t.hit_streak;
      t.miss_count = 0;
      t.vote(d.cls);
      ev.push_back({frame, TrackEventKind::Match, t.id, d.cls, d.blob.box});
      maybe_promote(t, frame, ev);
    }
    for (std::size_t ti : assoc.unmatched_tracks) {
      Track& t = tracks_[ti];
      ++t.miss_count;
      t.hit_streak = 0;
      ev.push_back({frame, TrackEventKind::Miss, t.id, std::nullopt, t.predicted_box});
      if (t.miss_count > cfg_.t_lost) retire(t, frame, ev);
    }
    std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });

    for (std::size_t di : assoc.unmatched_dets) {
      const Detection& d = dets[di];
      Track t;
      t.id = next_id_++;
      t.kstate = kf_init(d.blob.box, cfg_.kalman, frame);
      t.hit_streak = 1;
      t.last_box = t.predicted_box = d.blob.box;
      t.vote(d.cls);
      ev.push_back({frame, TrackEventKind::Spawn, t.id, d.cls, d.blob.box});
      maybe_promote(t, frame, ev);
      tracks_.push_back(std::move(t));
    }
    return ev;
  }

  /// Treats every live track as exited: confirmed tracks are counted.
  std::vector<TrackEvent> finalize(std::int64_t frame) {
    std::vector<TrackEvent> ev;
    for (auto& t : tracks_) retire(t, frame, ev);
    tracks_.clear();
    return ev;
  }

 private:
  void maybe_promote(Track& t, std::int64_t frame, std::vector<TrackEvent>& ev) const {
    if (t.status == TrackStatus::Tentative && t.hit_streak >= cfg_.n_hits) {
      t.status = TrackStatus::Active;
      ev.push_back({frame, TrackEventKind::Promote, t.id, std::nullopt, std::nullopt});
    }
  }

  void retire(Track& t, std::int64_t frame, std::vector<TrackEvent>& ev) {
    const bool was_active = t.status == TrackStatus::Active;
    t.status = TrackStatus::Deleted;
    ev.push_back({frame, TrackEventKind::Delete, t.id, std::nullopt, std::nullopt});
    if (was_active) {
      const ObjectClass c = vote_class(t);
      counter_.increment(c);
      ev.push_back({frame, TrackEventKind::Count, t.id, c, std::nullopt});
    }
  }

  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  ClassCounter counter_;
  std::int64_t next_id_ = 1;
};

}  // namespace svs
