#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <string>
#include <vector>

#include "pushdet/evaluation.hpp"
#include "pushdet/forest.hpp"
#include "pushdet/interaction.hpp"
#include "pushdet/tracker.hpp"

namespace pushdet {

enum class AlertMode : std::uint8_t { PerFrame, PerWindow };

struct RunConfig {
  PipelineConfig pipeline;
  AlertMode alert_mode = AlertMode::PerWindow;
  std::size_t window_frames = 30;
  /// 1 runs everything inline; >= 2 adds reader and writer threads.
  unsigned threads = 1;

  void validate() const;
};

struct PairEvent {
  TrackId a = 0;
  TrackId b = 0;
  Label pred = Label::Normal;
  double proba = 0.0;
};

struct FrameEvent {
  std::int64_t frame = 0;
  std::vector<PairEvent> pairs;
  bool alert = false;
};

/// {"frame": n, "pairs": [{"a": .., "b": .., "pred": "push", "proba": 0.63}], "alert": false}
std::string serialize_event(const FrameEvent& event);

/// Track -> features -> gate -> classify -> alert, one frame at a time.
/// Memory stays bounded by live tracks and the alert window.
class StreamRunner {
 public:
  /// Throws Error(Config) when the model does not match the feature set.
  StreamRunner(const ForestModel& model, RunConfig cfg);

  /// Throws Error(Sequencing) for out-of-order frames; state is untouched then.
  FrameEvent process(const FrameDetections& frame);

  std::size_t live_tracks() const noexcept { return tracker_.tracks().size(); }
  std::size_t feature_states() const noexcept { return featurizer_.tracked_states(); }
  std::size_t window_size() const noexcept { return window_.size(); }

 private:
  struct WindowEntry {
    bool gated;
    bool push;
  };

  const ForestModel& model_;
  RunConfig cfg_;
  Tracker tracker_;
  PairFeaturizer featurizer_;
  std::deque<WindowEntry> window_;
  std::size_t gated_in_window_ = 0;
  std::size_t push_in_window_ = 0;
};

struct RunSummary {
  std::size_t lines = 0;
  std::size_t events = 0;
  std::size_t input_errors = 0;
};

/// Reads JSONL frames from `in` and writes one event line per accepted frame.
/// Bad lines are reported on `log` and skipped.
RunSummary run_stream(std::istream& in, std::ostream& out, std::ostream& log, const ForestModel& model,
                      const RunConfig& cfg);

}  // namespace pushdet
