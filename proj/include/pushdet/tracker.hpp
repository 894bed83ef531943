#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pushdet/skeleton.hpp"

namespace pushdet {

/// Intersection over union of two (x, y, w, h) boxes. Symmetric, in [0, 1].
double iou(const BBox& a, const BBox& b) noexcept;

/// Fixed-capacity FIFO; pushing into a full buffer evicts the oldest entry.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 0) : capacity_(capacity) { items_.reserve(capacity); }

  void push(T value) {
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
      items_.push_back(std::move(value));
    } else {
      items_[head_] = std::move(value);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return items_.empty(); }

  /// 0 is the oldest retained entry.
  const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }
  const T& back() const { return (*this)[items_.size() - 1]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<T> items_;
};

struct TrackerConfig {
  double iou_min = 0.3;
  std::int64_t max_age = 30;
  std::size_t history_cap = 64;

  /// Throws Error(Config).
  void validate() const;
};

struct HistoryEntry {
  std::int64_t frame_idx;
  Skeleton skeleton;
};

struct Track {
  TrackId track_id = 0;
  BBox last_bbox;
  std::int64_t last_frame_idx = 0;
  std::int64_t age_frames = 0;
  RingBuffer<HistoryEntry> history;
};

struct TrackedPerson {
  TrackId track_id;
  Skeleton skeleton;
};

struct TrackedFrame {
  std::int64_t frame_idx = 0;
  std::int64_t ts_ms = 0;
  /// In detection order; each skeleton carries its tid as well.
  std::vector<TrackedPerson> persons;
};

/// Greedy IoU association with monotonically increasing ids. One instance per
/// stream.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Associates one frame. Throws Error(Sequencing) if frame_idx does not
  /// exceed the previous frame handed to this tracker.
  TrackedFrame step(const FrameDetections& dets);

  const std::vector<Track>& tracks() const noexcept { return tracks_; }
  const TrackerConfig& config() const noexcept { return cfg_; }
  TrackId next_id() const noexcept { return next_id_; }

 private:
  TrackerConfig cfg_;
  std::vector<Track> tracks_;  // ascending track_id
  TrackId next_id_ = 1;
  std::int64_t last_frame_ = -1;
  bool started_ = false;
};

struct TrackedClip {
  std::string clip_id;
  std::optional<Label> label;
  Resolution resolution;
  std::vector<TrackedFrame> frames;
};

/// Runs a fresh tracker over the clip.
TrackedClip track_clip(const ClipRecord& clip, const TrackerConfig& cfg = {});

/// Uses the tids already present when every person carries one, otherwise
/// tracks from scratch.
TrackedClip ensure_tracked(const ClipRecord& clip, const TrackerConfig& cfg = {});

/// Writes tids back into the skeletons for `track` output.
ClipRecord to_clip_record(const TrackedClip& tracked);

}  // namespace pushdet
