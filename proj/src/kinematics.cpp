#include "pushdet/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pushdet/error.hpp"

namespace pushdet {

namespace {

Point2 midpoint(Point2 a, Point2 b) noexcept { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

bool reliable(const Skeleton& s, Joint j, double conf_min) noexcept { return s[j].conf >= conf_min; }

template <typename... J>
bool all_reliable(const Skeleton& s, double conf_min, J... joints) noexcept {
  return (reliable(s, joints, conf_min) && ...);
}

std::optional<double> angle_if_reliable(const Skeleton& s, double conf_min, Joint a, Joint b, Joint c) {
  if (!all_reliable(s, conf_min, a, b, c)) return std::nullopt;
  try {
    return joint_angle(s[a].point(), s[b].point(), s[c].point());
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

double joint_angle(Point2 a, Point2 b, Point2 c) {
  // Evaluated in extended precision: arccos amplifies rounding in the cosine
  // by 1/sin(theta), which matters for nearly straight or folded joints.
  using real = long double;
  const real bax = real(a.x) - b.x, bay = real(a.y) - b.y;
  const real bcx = real(c.x) - b.x, bcy = real(c.y) - b.y;
  const real na = std::hypot(bax, bay);
  const real nc = std::hypot(bcx, bcy);
  if (!(na > 0) || !(nc > 0)) throw Error(Errc::DegenerateGeometry, "zero-length segment at joint vertex");
  const real cosine = std::clamp((bax * bcx + bay * bcy) / (na * nc), real(-1), real(1));
  return static_cast<double>(std::acos(cosine) * (real(180) / std::numbers::pi_v<real>));
}

FeatureSet feature_set_from_count(int count) {
  if (count == 4) return FeatureSet::Quad4;
  if (count == 9) return FeatureSet::Full9;
  throw Error(Errc::Config, "feature set must be 4 or 9, got " + std::to_string(count));
}

bool FeatureVector::usable(FeatureSet fs) const noexcept {
  const std::size_t n = per_person_dim(fs);
  return std::all_of(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n),
                     [](EntryState s) { return s != EntryState::Invalid; });
}

std::string FeatureVector::mask_string() const {
  std::string out(kNumFeatures, 'x');
  for (std::size_t i = 0; i < kNumFeatures; ++i) out[i] = static_cast<char>(mask[i]);
  return out;
}

void KinematicsConfig::validate() const {
  if (!(kp_conf_min > 0.0 && kp_conf_min < 1.0)) throw Error(Errc::Config, "kp_conf_min must lie in (0, 1)");
  if (impute_window < 0) throw Error(Errc::Config, "impute_window must be >= 0");
}

std::optional<double> torso_inclination(const Skeleton& s, double conf_min) {
  using enum Joint;
  if (!all_reliable(s, conf_min, LeftShoulder, RightShoulder, LeftHip, RightHip)) return std::nullopt;
  const Point2 shoulders = midpoint(s[LeftShoulder].point(), s[RightShoulder].point());
  const Point2 hips = midpoint(s[LeftHip].point(), s[RightHip].point());
  // Angle at the hip midpoint between the torso axis and a point straight above it.
  return joint_angle(shoulders, hips, {hips.x, hips.y - 1.0});
}

std::optional<std::array<double, 4>> quad_angles(const Skeleton& s, double conf_min) {
  using enum Joint;
  if (!all_reliable(s, conf_min, LeftShoulder, RightShoulder, LeftHip, RightHip)) return std::nullopt;
  const Point2 ls = s[LeftShoulder].point(), rs = s[RightShoulder].point();
  const Point2 rh = s[RightHip].point(), lh = s[LeftHip].point();
  return std::array<double, 4>{joint_angle(rs, ls, lh), joint_angle(ls, rs, rh), joint_angle(rs, rh, lh),
                               joint_angle(rh, lh, ls)};
}

FeatureVector compute_features(const Skeleton& s, double conf_min) {
  using enum Joint;
  FeatureVector fv;
  fv.mask.fill(EntryState::Invalid);
  auto set = [&](Feature f, std::optional<double> v) {
    if (!v) return;
    fv.values[static_cast<std::size_t>(f)] = *v;
    fv.mask[static_cast<std::size_t>(f)] = EntryState::Valid;
  };

  std::optional<std::array<double, 4>> quad;
  std::optional<double> torso;
  try {
    quad = quad_angles(s, conf_min);
  } catch (const Error&) {
  }
  try {
    torso = torso_inclination(s, conf_min);
  } catch (const Error&) {
  }
  if (quad) {
    set(Feature::QuadLeftShoulder, (*quad)[0]);
    set(Feature::QuadRightShoulder, (*quad)[1]);
    set(Feature::QuadRightHip, (*quad)[2]);
    set(Feature::QuadLeftHip, (*quad)[3]);
  }
  set(Feature::TorsoIncl, torso);
  set(Feature::ElbowLeft, angle_if_reliable(s, conf_min, LeftShoulder, LeftElbow, LeftWrist));
  set(Feature::ElbowRight, angle_if_reliable(s, conf_min, RightShoulder, RightElbow, RightWrist));
  set(Feature::AbductLeft, angle_if_reliable(s, conf_min, LeftHip, LeftShoulder, LeftElbow));
  set(Feature::AbductRight, angle_if_reliable(s, conf_min, RightHip, RightShoulder, RightElbow));
  return fv;
}

FeatureVector ImputationState::apply(FeatureVector fv, std::int64_t frame_idx, std::int64_t window) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (fv.mask[i] == EntryState::Valid) {
      last_value_[i] = fv.values[i];
      last_frame_[i] = frame_idx;
    } else if (last_frame_[i] && frame_idx - *last_frame_[i] <= window) {
      fv.values[i] = last_value_[i];
      fv.mask[i] = EntryState::Imputed;
    }
  }
  return fv;
}

FeatureVector extract_features(const Skeleton& skel, std::int64_t frame_idx, ImputationState& history,
                               const KinematicsConfig& cfg) {
  return history.apply(compute_features(skel, cfg.kp_conf_min), frame_idx, cfg.impute_window);
}

}  // namespace pushdet
