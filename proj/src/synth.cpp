#include "pushdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "pushdet/error.hpp"
#include "pushdet/rng.hpp"

namespace pushdet {

void ScenarioParams::validate() const {
  if (n_frames < 2) throw Error(Errc::Config, "n_frames must be >= 2");
  if (!(noise_px >= 0.0)) throw Error(Errc::Config, "noise_px must be >= 0");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw Error(Errc::Config, "dropout_p must lie in [0, 1)");
  if (!(scale > 0.0)) throw Error(Errc::Config, "scale must be > 0");
  if (fps <= 0) throw Error(Errc::Config, "fps must be > 0");
  if (resolution.width <= 0 || resolution.height <= 0) throw Error(Errc::Config, "resolution must be positive");
}

ScenarioParams ScenarioParams::close_range() { return {}; }

ScenarioParams ScenarioParams::far_surveillance() {
  ScenarioParams p;
  p.resolution = {1920, 1080};
  p.noise_px = 4.0;
  p.dropout_p = 0.10;
  return p;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

// Counter-clockwise in a y-up frame; in image coordinates a positive angle
// turns (0, 1) toward -x.
Point2 rotate(Point2 v, double deg) {
  const double c = std::cos(deg * kDeg), s = std::sin(deg * kDeg);
  return {v.x * c - v.y * s, v.x * s + v.y * c};
}

Point2 unit(Point2 v) {
  const double n = std::hypot(v.x, v.y);
  return {v.x / n, v.y / n};
}

struct Arm {
  Point2 elbow, wrist;
};

// The upper arm leaves the shoulder-to-hip direction by `abduct` degrees;
// the forearm deviates from the upper arm by 180 - `elbow` degrees.
Arm place_arm(Point2 shoulder, Point2 hip, double abduct, double elbow, double sign, const BodyShape& b) {
  const Point2 down = unit(hip - shoulder);
  const Point2 upper = rotate(down, -sign * abduct);
  const Point2 fore = rotate(upper, -sign * (180.0 - elbow));
  const Point2 e = shoulder + b.upper_arm * upper;
  return {e, e + b.forearm * fore};
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

std::array<Point2, kNumKeypoints> render_pose(const ActorPose& pose, const BodyShape& b) {
  using enum Joint;
  std::array<Point2, kNumKeypoints> k{};
  const double phi = pose.lean_deg * kDeg;
  const Point2 up{std::sin(phi), -std::cos(phi)};
  const Point2 across{std::cos(phi), std::sin(phi)};  // toward the actor's left (+x when facing the camera)
  const Point2 shoulder_mid = pose.hip_mid + b.torso * up;

  k[index(LeftShoulder)] = shoulder_mid + (0.5 * b.shoulder_width) * across;
  k[index(RightShoulder)] = shoulder_mid - (0.5 * b.shoulder_width) * across;
  k[index(LeftHip)] = pose.hip_mid + Point2{0.5 * b.hip_width, 0.0};
  k[index(RightHip)] = pose.hip_mid - Point2{0.5 * b.hip_width, 0.0};

  const Arm left = place_arm(k[index(LeftShoulder)], k[index(LeftHip)], pose.abduct_l, pose.elbow_l, pose.arm_sign_l, b);
  const Arm right = place_arm(k[index(RightShoulder)], k[index(RightHip)], pose.abduct_r, pose.elbow_r, pose.arm_sign_r, b);
  k[index(LeftElbow)] = left.elbow;
  k[index(LeftWrist)] = left.wrist;
  k[index(RightElbow)] = right.elbow;
  k[index(RightWrist)] = right.wrist;

  const double swing = pose.gait_amp_deg * std::sin(pose.gait_phase);
  const Point2 down{0.0, 1.0};
  for (const auto& [hip, knee, ankle, s] : {std::tuple{LeftHip, LeftKnee, LeftAnkle, 1.0},
                                             std::tuple{RightHip, RightKnee, RightAnkle, -1.0}}) {
    const Point2 thigh = rotate(down, s * swing);
    k[index(knee)] = k[index(hip)] + b.thigh * thigh;
    k[index(ankle)] = k[index(knee)] + b.shin * rotate(down, 0.5 * s * swing);
  }

  const Point2 nose = shoulder_mid + b.head * up;
  k[index(Nose)] = nose;
  k[index(LeftEye)] = nose + (0.25 * b.head) * across + (0.2 * b.head) * up;
  k[index(RightEye)] = nose - (0.25 * b.head) * across + (0.2 * b.head) * up;
  k[index(LeftEar)] = nose + (0.5 * b.head) * across + (0.05 * b.head) * up;
  k[index(RightEar)] = nose - (0.5 * b.head) * across + (0.05 * b.head) * up;
  return k;
}

namespace {

BodyShape sample_body(SplitMix64& rng, double h) {
  auto seg = [&](double fraction) { return fraction * h * rng.uniform(0.95, 1.05); };
  BodyShape b;
  b.torso = seg(0.30);
  b.shoulder_width = seg(0.22);
  b.hip_width = seg(0.16);
  b.upper_arm = seg(0.17);
  b.forearm = seg(0.15);
  b.thigh = seg(0.24);
  b.shin = seg(0.23);
  b.head = seg(0.12);
  return b;
}

// Everyday motion bounded to |lean| <= 7 deg and abduction <= 30 deg.
struct CasualMotion {
  double lean_bias, sway_amp, sway_freq, sway_phase;
  double abd_base_l, abd_base_r, abd_swing, arm_freq, arm_phase;
  double elbow_base, gait_amp, gait_freq, gait_phase;

  static CasualMotion sample(SplitMix64& rng, bool walking, bool gesturing) {
    CasualMotion m;
    m.lean_bias = rng.uniform(-3.0, 3.0);
    m.sway_amp = rng.uniform(1.0, 4.0);
    m.sway_freq = rng.uniform(0.08, 0.25);
    m.sway_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double base_hi = gesturing ? 20.0 : 14.0;
    m.abd_base_l = rng.uniform(6.0, base_hi);
    m.abd_base_r = rng.uniform(6.0, base_hi);
    m.abd_swing = rng.uniform(2.0, 10.0);
    m.arm_freq = rng.uniform(0.15, 0.35);
    m.arm_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    m.elbow_base = rng.uniform(150.0, 172.0);
    m.gait_amp = walking ? rng.uniform(15.0, 25.0) : rng.uniform(0.0, 3.0);
    m.gait_freq = rng.uniform(0.18, 0.26);
    m.gait_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return m;
  }

  void apply(ActorPose& p, double t) const {
    p.lean_deg = lean_bias + sway_amp * std::sin(sway_freq * t + sway_phase);
    const double s = 0.5 + 0.5 * std::sin(arm_freq * t + arm_phase);
    p.abduct_l = std::min(30.0, abd_base_l + abd_swing * s);
    p.abduct_r = std::min(30.0, abd_base_r + abd_swing * (1.0 - s));
    p.elbow_l = std::clamp(elbow_base + 5.0 * std::sin(arm_freq * t), 140.0, 180.0);
    p.elbow_r = std::clamp(elbow_base + 5.0 * std::cos(arm_freq * t), 140.0, 180.0);
    p.arm_sign_l = 1.0;
    p.arm_sign_r = -1.0;
    p.gait_amp_deg = gait_amp;
    p.gait_phase = gait_freq * t + gait_phase;
  }
};

ActorAngles angles_of(const ActorPose& p) {
  return {std::abs(p.lean_deg), p.abduct_l, p.abduct_r, p.elbow_l, p.elbow_r};
}

Skeleton observe(const std::array<Point2, kNumKeypoints>& exact, const ScenarioParams& params, double height,
                 SplitMix64& rng) {
  Skeleton s;
  double min_x = INFINITY, min_y = INFINITY, max_x = -INFINITY, max_y = -INFINITY;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    Keypoint& k = s.keypoints[i];
    k.x = quantize(exact[i].x + params.noise_px * rng.normal());
    k.y = quantize(exact[i].y + params.noise_px * rng.normal());
    const bool dropped = rng.uniform() < params.dropout_p;
    k.conf = quantize(dropped ? rng.uniform(0.05, 0.45) : rng.uniform(0.70, 0.99));
    min_x = std::min(min_x, k.x);
    max_x = std::max(max_x, k.x);
    min_y = std::min(min_y, k.y);
    max_y = std::max(max_y, k.y);
  }
  const double pad = 0.06 * height;
  s.bbox = {quantize(min_x - pad), quantize(min_y - 1.5 * pad), quantize(max_x - min_x + 2.0 * pad),
            quantize(max_y - min_y + 2.5 * pad)};
  s.det_conf = quantize(rng.uniform(0.80, 0.99));
  return s;
}

}  // namespace

SynthClip gen_clip(const ScenarioParams& params) {
  params.validate();
  // Motion and sensor noise draw from separate streams so that the same seed
  // animates identically at any noise level.
  SplitMix64 motion = SplitMix64::stream(params.seed, 0);
  SplitMix64 sensor = SplitMix64::stream(params.seed, 1);

  const bool push = params.scenario == Scenario::Push;
  const double h = params.scale;
  const double n = static_cast<double>(params.n_frames);
  const BodyShape body_a = sample_body(motion, h);
  const BodyShape body_b = sample_body(motion, h);
  const double cx = 0.5 * params.resolution.width + motion.uniform(-0.05, 0.05) * h;
  const double hip_y = 0.5 * params.resolution.height + 0.05 * h;
  const double depth_offset = motion.uniform(-0.12, 0.12) * h;
  const double dir = motion.uniform() < 0.5 ? 1.0 : -1.0;  // side of B relative to A

  SynthClip out;
  out.clip.clip_id = std::string(push ? "push_" : "normal_") + std::to_string(params.seed);
  out.clip.label = push ? Label::Push : Label::Normal;
  out.clip.resolution = params.resolution;
  out.truth.clip_id = out.clip.clip_id;
  out.truth.label = *out.clip.label;

  std::vector<std::array<ActorPose, 2>> poses(static_cast<std::size_t>(params.n_frames));

  if (!push) {
    const bool standing_chat = motion.uniform() < 0.5;
    const bool b_walks = !standing_chat && motion.uniform() < 0.7;
    const CasualMotion ma = CasualMotion::sample(motion, !standing_chat, standing_chat);
    const CasualMotion mb = CasualMotion::sample(motion, b_walks, standing_chat);
    const double va = standing_chat ? 0.0 : motion.uniform(0.015, 0.028) * h;
    const double vb = b_walks ? motion.uniform(0.015, 0.028) * h : 0.0;
    const double t_cross = motion.uniform(0.35, 0.65) * n;
    const double gap = motion.uniform(0.5, 0.9) * h;
    const double drift = motion.uniform(-0.004, 0.004) * h;
    for (std::size_t f = 0; f < poses.size(); ++f) {
      const double t = static_cast<double>(f);
      ActorPose& a = poses[f][0];
      ActorPose& b = poses[f][1];
      ma.apply(a, t);
      mb.apply(b, t);
      if (standing_chat) {
        a.hip_mid = {cx - 0.5 * dir * gap + drift * t, hip_y};
        b.hip_mid = {cx + 0.5 * dir * gap - drift * t, hip_y + depth_offset};
      } else {
        a.hip_mid = {cx + dir * va * (t - t_cross), hip_y};
        b.hip_mid = {cx - dir * vb * (t - t_cross), hip_y + depth_offset};
      }
    }
  } else {
    const std::int64_t approach_end = std::llround(0.2 * n);
    const std::int64_t contact_begin = std::llround(0.3 * n);
    const std::int64_t contact_end = std::llround(0.6 * n);
    const double windup = std::max<double>(1.0, static_cast<double>(contact_begin - approach_end));
    const double contact_len = std::max<double>(1.0, static_cast<double>(contact_end - contact_begin));
    out.truth.contact = std::pair{contact_begin, contact_end};

    const CasualMotion ma = CasualMotion::sample(motion, true, false);
    const CasualMotion mb = CasualMotion::sample(motion, false, false);
    const double va = motion.uniform(0.015, 0.028) * h;
    const double contact_gap = motion.uniform(0.45, 0.6) * h;
    const double abd_target = motion.uniform(86.0, 94.0);
    const double elbow_target = motion.uniform(163.0, 177.0);
    const double lean_target = motion.uniform(21.0, 29.0);
    const double a_lean = motion.uniform(0.0, 6.0);
    const double b_arm_target = motion.uniform(15.0, 40.0);
    const double shove = motion.uniform(0.35, 0.55) * h;
    const double accel = 2.0 * shove / (contact_len * contact_len);
    const double recover = 0.25 * n;
    const double tau = 10.0;

    const double b_x0 = cx + 0.35 * dir * h;
    const double a_x_contact = b_x0 - dir * contact_gap;
    auto b_shift = [&](double t) {
      if (t <= contact_begin) return 0.0;
      if (t <= contact_end) return 0.5 * accel * (t - contact_begin) * (t - contact_begin);
      const double v_end = accel * contact_len;
      return shove + v_end * tau * (1.0 - std::exp(-(t - contact_end) / tau));
    };

    for (std::size_t f = 0; f < poses.size(); ++f) {
      const double t = static_cast<double>(f);
      ActorPose& a = poses[f][0];
      ActorPose& b = poses[f][1];
      ma.apply(a, t);
      mb.apply(b, t);
      const ActorPose a_casual = a;
      const ActorPose b_casual = b;

      // A walks in, slows through the wind-up and follows B while pushing.
      double ax;
      if (t <= approach_end) ax = a_x_contact - dir * (va * (approach_end - t) + 0.5 * va * windup);
      else if (t <= contact_begin) ax = a_x_contact - dir * 0.5 * va * (contact_begin - t);
      else ax = a_x_contact + dir * 0.4 * std::min(b_shift(t), shove);
      a.hip_mid = {ax, hip_y};
      b.hip_mid = {b_x0 + dir * b_shift(t), hip_y + depth_offset};

      // Arm raise: 0 before the wind-up, 1 through contact, easing off after.
      double raise = 0.0;
      if (t >= contact_begin && t < contact_end) raise = 1.0;
      else if (t >= approach_end && t < contact_begin) raise = smoothstep((t - approach_end) / windup);
      else if (t >= contact_end) raise = 1.0 - smoothstep((t - contact_end) / (0.15 * n));
      if (raise > 0.0) {
        const double tremor = 0.8 * std::sin(0.7 * t);
        const double elbow_tremor = 2.0 * std::sin(0.5 * t + 1.0);
        a.abduct_l = lerp(a_casual.abduct_l, abd_target + tremor, raise);
        a.abduct_r = lerp(a_casual.abduct_r, abd_target - tremor, raise);
        a.elbow_l = lerp(a_casual.elbow_l, elbow_target + elbow_tremor, raise);
        a.elbow_r = lerp(a_casual.elbow_r, elbow_target - elbow_tremor, raise);
        a.arm_sign_l = a.arm_sign_r = dir;
        a.lean_deg = lerp(a_casual.lean_deg, dir * a_lean, raise);
        a.gait_amp_deg = a_casual.gait_amp_deg * (1.0 - raise);
      }

      // B tips away from A over the second half of the wind-up, holds through
      // contact, then recovers.
      const double mid_windup = approach_end + 0.5 * windup;
      double tip = 0.0;
      if (t >= contact_begin && t < contact_end) tip = 1.0;
      else if (t >= mid_windup && t < contact_begin) tip = smoothstep((t - mid_windup) / (0.5 * windup));
      else if (t >= contact_end) tip = 1.0 - smoothstep((t - contact_end) / recover);
      if (tip > 0.0) {
        b.lean_deg = lerp(b_casual.lean_deg, dir * (lean_target + 0.8 * std::sin(0.9 * t)), tip);
        b.abduct_l = lerp(b_casual.abduct_l, b_arm_target, tip);
        b.abduct_r = lerp(b_casual.abduct_r, b_arm_target, tip);
        b.gait_amp_deg = lerp(b_casual.gait_amp_deg, 12.0, tip);
      }
    }
  }

  const std::array<const BodyShape*, 2> bodies{&body_a, &body_b};
  out.clip.frames.reserve(poses.size());
  out.truth.frames.reserve(poses.size());
  for (std::size_t f = 0; f < poses.size(); ++f) {
    FrameDetections fd;
    fd.frame_idx = static_cast<std::int64_t>(f);
    fd.ts_ms = static_cast<std::int64_t>(std::llround(1000.0 * static_cast<double>(f) / params.fps));
    GroundTruthFrame gt{fd.frame_idx, {}};
    for (std::size_t actor = 0; actor < 2; ++actor) {
      const auto exact = render_pose(poses[f][actor], *bodies[actor]);
      fd.persons.push_back(observe(exact, params, h, sensor));
      gt.actors[actor] = angles_of(poses[f][actor]);
    }
    out.clip.frames.push_back(std::move(fd));
    out.truth.frames.push_back(gt);
  }
  return out;
}

std::vector<SynthClip> gen_corpus(std::size_t n_push, std::size_t n_normal, std::uint64_t base_seed,
                                  const ScenarioParams& tmpl) {
  std::vector<SynthClip> out;
  out.reserve(n_push + n_normal);
  for (std::size_t i = 0; i < n_push + n_normal; ++i) {
    ScenarioParams p = tmpl;
    p.scenario = i < n_push ? Scenario::Push : Scenario::Normal;
    p.seed = base_seed + i;
    out.push_back(gen_clip(p));
  }
  return out;
}

std::string ground_truth_json(const std::vector<GroundTruth>& truths) {
  using ojson = nlohmann::ordered_json;
  ojson clips = ojson::array();
  for (const GroundTruth& g : truths) {
    ojson frames = ojson::array();
    for (const GroundTruthFrame& f : g.frames) {
      ojson actors = ojson::array();
      for (const ActorAngles& a : f.actors)
        actors.push_back({{"torso_incl", quantize(a.torso_incl)},
                          {"abduct_l", quantize(a.abduct_l)},
                          {"abduct_r", quantize(a.abduct_r)},
                          {"elbow_l", quantize(a.elbow_l)},
                          {"elbow_r", quantize(a.elbow_r)}});
      frames.push_back({{"frame", f.frame_idx}, {"actors", std::move(actors)}});
    }
    clips.push_back({{"clip_id", g.clip_id},
                     {"label", to_string(g.label)},
                     {"contact", g.contact ? ojson::array({g.contact->first, g.contact->second}) : ojson(nullptr)},
                     {"frames", std::move(frames)}});
  }
  return ojson{{"clips", std::move(clips)}}.dump() + "\n";
}

}  // namespace pushdet
