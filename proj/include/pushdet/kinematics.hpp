#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pushdet/skeleton.hpp"

namespace pushdet {

/// Angle ABC in degrees, in [0, 180]. Throws Error(DegenerateGeometry) when
/// A or C coincides with B.
double joint_angle(Point2 a, Point2 b, Point2 c);

/// Feature slots, in wire/CSV order.
enum class Feature : std::size_t {
  QuadLeftShoulder = 0,
  QuadRightShoulder,
  QuadRightHip,
  QuadLeftHip,
  TorsoIncl,
  ElbowLeft,
  ElbowRight,
  AbductLeft,
  AbductRight,
};

inline constexpr std::size_t kNumFeatures = 9;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "quad_ls", "quad_rs", "quad_rh", "quad_lh", "torso_incl",
    "elbow_l", "elbow_r", "abduct_l", "abduct_r"};

/// Which per-person entries go to the classifier.
enum class FeatureSet : std::uint8_t {
  Quad4 = 4,  ///< the four shoulder-hip quadrilateral angles
  Full9 = 9,
};

FeatureSet feature_set_from_count(int count);
constexpr std::size_t per_person_dim(FeatureSet fs) noexcept { return static_cast<std::size_t>(fs); }

enum class EntryState : char { Valid = 'v', Imputed = 'i', Invalid = 'x' };

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  std::array<EntryState, kNumFeatures> mask{};

  double operator[](Feature f) const noexcept { return values[static_cast<std::size_t>(f)]; }
  EntryState state(Feature f) const noexcept { return mask[static_cast<std::size_t>(f)]; }
  /// True when every entry of `fs` is valid or imputed.
  bool usable(FeatureSet fs) const noexcept;
  /// 9 characters of v/i/x.
  std::string mask_string() const;
};

struct KinematicsConfig {
  double kp_conf_min = 0.5;
  std::int64_t impute_window = 5;
  FeatureSet feature_set = FeatureSet::Full9;

  void validate() const;
};

/// nullopt when a shoulder or hip keypoint is below kp_conf_min. 0 = upright,
/// 90 = horizontal torso; measured against image up (0, -1).
std::optional<double> torso_inclination(const Skeleton& skel, double kp_conf_min = 0.5);

/// Interior angles at LS, RS, RH, LH of the quadrilateral LS-RS-RH-LH.
std::optional<std::array<double, 4>> quad_angles(const Skeleton& skel, double kp_conf_min = 0.5);

/// All nine entries from one skeleton, without imputation. Degenerate geometry
/// and low-confidence keypoints both yield Invalid entries.
FeatureVector compute_features(const Skeleton& skel, double kp_conf_min = 0.5);

/// Per-track memory of the most recent valid value of each entry.
class ImputationState {
 public:
  /// Fills Invalid entries from values seen within `window` frames before
  /// `frame_idx`, marking them Imputed, and records the Valid ones.
  FeatureVector apply(FeatureVector fresh, std::int64_t frame_idx, std::int64_t window);

 private:
  std::array<double, kNumFeatures> last_value_{};
  std::array<std::optional<std::int64_t>, kNumFeatures> last_frame_{};
};

/// compute_features followed by imputation against the track's state.
FeatureVector extract_features(const Skeleton& skel, std::int64_t frame_idx, ImputationState& history,
                               const KinematicsConfig& cfg);

}  // namespace pushdet
