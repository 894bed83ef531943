#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pushdet/forest.hpp"
#include "pushdet/interaction.hpp"
#include "pushdet/skeleton.hpp"
#include "pushdet/tracker.hpp"

namespace pushdet {

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 42;
  bool stratified = true;

  void validate() const;
};

/// Parses "0.8,0.1,0.1".
SplitSpec parse_split_fractions(const std::string& text, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Partitions item indices 0..labels.size()-1. Each class is shuffled with its
/// own seeded stream, bucket sizes come from largest-remainder rounding, and
/// the buckets keep input order. Throws Error(Split).
SplitIndices split_indices(const std::vector<Label>& labels, const SplitSpec& spec);

struct ClipSplit {
  std::vector<ClipRecord> train, val, test;
};
/// Clips must be labeled.
ClipSplit split_clips(const std::vector<ClipRecord>& clips, const SplitSpec& spec);

struct ClipDecisionConfig {
  double tau_clip = 0.3;
  void validate() const;
};

/// Push iff the Push share of gated frames reaches tau_clip; no frames -> Normal.
Label decide_clip(const std::vector<Label>& frame_preds, const ClipDecisionConfig& cfg);

struct ConfusionMatrix {
  /// counts[true][pred], indexed Normal = 0, Push = 1.
  std::array<std::array<std::uint64_t, 2>, 2> counts{};

  std::uint64_t total() const noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(const std::vector<Label>& truth, const std::vector<Label>& pred);

/// Row-normalized rates; a row with no samples is nullopt.
using NormalizedRow = std::optional<std::array<double, 2>>;
std::array<NormalizedRow, 2> normalize_rows(const ConfusionMatrix& cm);

struct PrecisionRecall {
  std::optional<double> precision;  ///< nullopt when nothing was predicted positive
  std::optional<double> recall;     ///< nullopt when no positives exist
};
PrecisionRecall precision_recall(const ConfusionMatrix& cm, Label positive = Label::Push);

/// Two-decimal rendering used in reports; undefined values print "n/a".
std::string format_rate(const std::optional<double>& v);
std::string render_normalized(const ConfusionMatrix& cm);

struct PipelineConfig {
  TrackerConfig tracker;
  KinematicsConfig kinematics;
  GateConfig gate;
  ClipDecisionConfig decision;
};

/// Tracks and featurizes every clip and pools the pair samples.
std::vector<PairSample> collect_pair_samples(const std::vector<ClipRecord>& clips, const PipelineConfig& cfg);

ForestModel train_on_samples(const std::vector<PairSample>& samples, FeatureSet fs, const ForestParams& params,
                             FitOptions options = {});

struct ClipOutcome {
  std::string clip_id;
  Label truth = Label::Normal;
  Label pred = Label::Normal;
  std::size_t gated_frames = 0;
  std::size_t push_frames = 0;
};

struct EvaluationResult {
  std::vector<ClipOutcome> clips;
  ConfusionMatrix clip_level;
  ConfusionMatrix frame_level;  ///< per pair sample against the clip label
};

/// A frame counts as Push when any of its gated pairs is predicted Push.
std::vector<Label> frame_predictions(const ForestModel& model, const std::vector<PairSample>& clip_samples);

EvaluationResult evaluate_clips(const ForestModel& model, const std::vector<ClipRecord>& clips,
                                const PipelineConfig& cfg);

/// Human-readable text block and the machine-readable JSON document.
std::string render_report(const EvaluationResult& r, const PipelineConfig& cfg, const std::string& subset);
std::string report_json(const EvaluationResult& r, const PipelineConfig& cfg, const SplitSpec& split,
                        const std::string& subset);

}  // namespace pushdet
