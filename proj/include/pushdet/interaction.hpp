#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pushdet/kinematics.hpp"
#include "pushdet/tracker.hpp"

namespace pushdet {

struct GateConfig {
  /// Pair eligible iff centroid distance < kappa * max(bbox heights).
  double kappa = 1.5;

  void validate() const;
};

struct PairSample {
  std::string clip_id;
  std::int64_t frame_idx = 0;
  TrackId tid_a = 0;  ///< left-most by bbox centroid x; lower tid on ties
  TrackId tid_b = 0;
  std::vector<double> features;  ///< a's entries then b's entries
  std::optional<Label> label;

  friend bool operator==(const PairSample&, const PairSample&) = default;
};

/// (tid_a, tid_b) for every pair within the gate, sorted.
std::vector<std::pair<TrackId, TrackId>> gate_pairs(const std::vector<TrackedPerson>& frame, const GateConfig& cfg);

/// Names of the pair columns for a feature set: a_quad_ls, ..., b_abduct_r.
std::vector<std::string> pair_feature_names(FeatureSet fs);

/// Per-stream feature bookkeeping shared by clip processing and the live
/// runner: keeps one imputation state per track and forgets tracks that
/// disappear from the tracker.
class PairFeaturizer {
 public:
  PairFeaturizer(KinematicsConfig kcfg, GateConfig gcfg);

  struct FramePair {
    TrackId tid_a;
    TrackId tid_b;
    std::vector<double> features;
  };

  /// Gated pairs of this frame whose entries are all valid or imputed.
  std::vector<FramePair> process(const TrackedFrame& frame);

  /// Drops imputation state for tracks not in `live` (sorted ids).
  void retain(const std::vector<TrackId>& live);
  std::size_t tracked_states() const noexcept { return states_.size(); }

 private:
  KinematicsConfig kcfg_;
  GateConfig gcfg_;
  std::vector<std::pair<TrackId, ImputationState>> states_;  // sorted by id

  ImputationState& state_for(TrackId id);
};

std::vector<PairSample> build_pair_samples(const TrackedClip& clip, const KinematicsConfig& kcfg,
                                           const GateConfig& gcfg);

/// CSV: clip_id,frame,tid_a,tid_b,f1..fN,label (label empty when unknown).
void write_pairs_csv(std::ostream& out, const std::vector<PairSample>& samples, std::size_t dim);
std::vector<PairSample> read_pairs_csv(std::istream& in);

}  // namespace pushdet
