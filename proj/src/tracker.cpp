#include "pushdet/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "pushdet/error.hpp"

namespace pushdet {

double iou(const BBox& a, const BBox& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

void TrackerConfig::validate() const {
  if (!(iou_min > 0.0 && iou_min < 1.0)) throw Error(Errc::Config, "iou_min must lie in (0, 1)");
  if (max_age < 1) throw Error(Errc::Config, "max_age must be >= 1");
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

TrackedFrame Tracker::step(const FrameDetections& dets) {
  if (started_ && dets.frame_idx <= last_frame_)
    throw Error(Errc::Sequencing, "frame " + std::to_string(dets.frame_idx) +
                                      " does not follow frame " + std::to_string(last_frame_));
  started_ = true;
  last_frame_ = dets.frame_idx;

  // Retire first so that an expired track can never be matched again.
  std::erase_if(tracks_, [&](const Track& t) { return dets.frame_idx - t.last_frame_idx > cfg_.max_age; });

  struct Candidate {
    double iou;
    std::size_t track;
    std::size_t det;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(tracks_.size() * dets.persons.size());
  for (std::size_t t = 0; t < tracks_.size(); ++t)
    for (std::size_t d = 0; d < dets.persons.size(); ++d) {
      const double v = iou(tracks_[t].last_bbox, dets.persons[d].bbox);
      if (v >= cfg_.iou_min) candidates.push_back({v, t, d});
    }
  // tracks_ is ordered by id, so the track index doubles as the id tie-break.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.track != b.track) return a.track < b.track;
    return a.det < b.det;
  });

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> det_to_track(dets.persons.size(), kNone);
  std::vector<bool> track_used(tracks_.size(), false);
  for (const Candidate& c : candidates) {
    if (track_used[c.track] || det_to_track[c.det] != kNone) continue;
    track_used[c.track] = true;
    det_to_track[c.det] = c.track;
  }

  TrackedFrame out{dets.frame_idx, dets.ts_ms, {}};
  out.persons.reserve(dets.persons.size());
  for (std::size_t d = 0; d < dets.persons.size(); ++d) {
    const Skeleton& skel = dets.persons[d];
    Track* track = nullptr;
    if (det_to_track[d] != kNone) {
      track = &tracks_[det_to_track[d]];
    } else {
      tracks_.push_back(Track{next_id_++, skel.bbox, dets.frame_idx, 0, RingBuffer<HistoryEntry>(cfg_.history_cap)});
      track = &tracks_.back();
    }
    track->last_bbox = skel.bbox;
    track->last_frame_idx = dets.frame_idx;
    Skeleton tagged = skel;
    tagged.tid = track->track_id;
    track->history.push({dets.frame_idx, tagged});
    out.persons.push_back({track->track_id, std::move(tagged)});
  }
  for (Track& t : tracks_) t.age_frames = dets.frame_idx - t.last_frame_idx;
  return out;
}

TrackedClip track_clip(const ClipRecord& clip, const TrackerConfig& cfg) {
  Tracker tracker(cfg);
  TrackedClip out{clip.clip_id, clip.label, clip.resolution, {}};
  out.frames.reserve(clip.frames.size());
  for (const FrameDetections& f : clip.frames) out.frames.push_back(tracker.step(f));
  return out;
}

TrackedClip ensure_tracked(const ClipRecord& clip, const TrackerConfig& cfg) {
  const bool all_tagged = std::all_of(clip.frames.begin(), clip.frames.end(), [](const FrameDetections& f) {
    return std::all_of(f.persons.begin(), f.persons.end(), [](const Skeleton& s) { return s.tid.has_value(); });
  });
  if (!all_tagged) return track_clip(clip, cfg);
  TrackedClip out{clip.clip_id, clip.label, clip.resolution, {}};
  for (const FrameDetections& f : clip.frames) {
    TrackedFrame tf{f.frame_idx, f.ts_ms, {}};
    for (const Skeleton& s : f.persons) {
      for (const TrackedPerson& seen : tf.persons)
        if (seen.track_id == *s.tid)
          throw Error(Errc::Schema, "duplicate tid " + std::to_string(*s.tid) + " in frame " +
                                        std::to_string(f.frame_idx), std::nullopt, "tid");
      tf.persons.push_back({*s.tid, s});
    }
    out.frames.push_back(std::move(tf));
  }
  return out;
}

ClipRecord to_clip_record(const TrackedClip& tracked) {
  ClipRecord out{tracked.clip_id, tracked.label, tracked.resolution, {}};
  out.frames.reserve(tracked.frames.size());
  for (const TrackedFrame& f : tracked.frames) {
    FrameDetections fd{f.frame_idx, f.ts_ms, {}};
    for (const TrackedPerson& p : f.persons) {
      Skeleton s = p.skeleton;
      s.tid = p.track_id;
      fd.persons.push_back(std::move(s));
    }
    out.frames.push_back(std::move(fd));
  }
  return out;
}

}  // namespace pushdet
