#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pushdet/skeleton.hpp"

namespace pushdet {

enum class Scenario : std::uint8_t { Normal = 0, Push = 1 };

struct ScenarioParams {
  Scenario scenario = Scenario::Normal;
  std::uint64_t seed = 0;
  std::int64_t n_frames = 60;
  Resolution resolution{848, 848};
  double noise_px = 1.0;   ///< std-dev of per-coordinate jitter
  double dropout_p = 0.02; ///< chance a keypoint is emitted with low confidence
  double scale = 300.0;    ///< nominal person height in pixels
  int fps = 30;

  void validate() const;

  /// Close-range frontal view: 848x848, 1 px jitter, 2% dropout.
  static ScenarioParams close_range();
  /// Distant high-mounted camera: 1920x1080, 4 px jitter, 10% dropout.
  static ScenarioParams far_surveillance();
};

/// Commanded joint angles for one actor in one frame, in degrees.
struct ActorAngles {
  double torso_incl = 0.0;
  double abduct_l = 0.0;
  double abduct_r = 0.0;
  double elbow_l = 180.0;
  double elbow_r = 180.0;
};

struct GroundTruthFrame {
  std::int64_t frame_idx = 0;
  /// Index 0 is actor A (the pusher in Push clips), index 1 actor B. The same
  /// order is used in each frame's `persons`.
  std::array<ActorAngles, 2> actors;
};

struct GroundTruth {
  std::string clip_id;
  Label label = Label::Normal;
  /// [first, last) frame indices of the contact phase; Push clips only.
  std::optional<std::pair<std::int64_t, std::int64_t>> contact;
  std::vector<GroundTruthFrame> frames;
};

struct SynthClip {
  ClipRecord clip;
  GroundTruth truth;
};

/// Limb segment lengths of one synthetic actor.
struct BodyShape {
  double torso = 0.0;
  double shoulder_width = 0.0;
  double hip_width = 0.0;
  double upper_arm = 0.0;
  double forearm = 0.0;
  double thigh = 0.0;
  double shin = 0.0;
  double head = 0.0;
};

/// Full pose of one actor. `lean_deg` is signed (positive tips the shoulders
/// toward +x); `arm_sign_*` is +1 when the arm rotates toward +x.
struct ActorPose {
  Point2 hip_mid;
  double lean_deg = 0.0;
  double abduct_l = 0.0, abduct_r = 0.0;
  double elbow_l = 180.0, elbow_r = 180.0;
  double arm_sign_l = 1.0, arm_sign_r = -1.0;
  double gait_phase = 0.0;
  double gait_amp_deg = 0.0;
};

/// Forward kinematics: exact keypoint positions for a pose, before jitter.
std::array<Point2, kNumKeypoints> render_pose(const ActorPose& pose, const BodyShape& body);

SynthClip gen_clip(const ScenarioParams& params);

/// Push clips use seeds base_seed + i, Normal clips base_seed + n_push + j.
std::vector<SynthClip> gen_corpus(std::size_t n_push, std::size_t n_normal, std::uint64_t base_seed,
                                  const ScenarioParams& tmpl);

/// {"clips": [{"clip_id", "label", "contact", "frames": [...]}, ...]}
std::string ground_truth_json(const std::vector<GroundTruth>& truths);

}  // namespace pushdet
