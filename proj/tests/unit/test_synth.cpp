#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "pushdet/error.hpp"
#include "pushdet/kinematics.hpp"
#include "pushdet/synth.hpp"

using namespace pushdet;

namespace {

ScenarioParams params(Scenario s, std::uint64_t seed) {
  ScenarioParams p;
  p.scenario = s;
  p.seed = seed;
  return p;
}

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST_CASE("same params give byte-identical clips") {
  for (Scenario s : {Scenario::Push, Scenario::Normal}) {
    const SynthClip a = gen_clip(params(s, 77));
    const SynthClip b = gen_clip(params(s, 77));
    CHECK(serialize_clip(a.clip) == serialize_clip(b.clip));
    CHECK(ground_truth_json({a.truth}) == ground_truth_json({b.truth}));
    CHECK(serialize_clip(gen_clip(params(s, 78)).clip) != serialize_clip(a.clip));
  }
}

TEST_CASE("clip ids, labels and corpus composition") {
  CHECK(gen_clip(params(Scenario::Push, 5)).clip.clip_id == "push_5");
  CHECK(gen_clip(params(Scenario::Normal, 5)).clip.label == Label::Normal);
  for (auto [np, nn] : {std::pair<std::size_t, std::size_t>{45, 45}, {21, 21}, {0, 0}}) {
    const auto corpus = gen_corpus(np, nn, 100, ScenarioParams{});
    REQUIRE(corpus.size() == np + nn);
    std::size_t push = 0;
    for (const auto& c : corpus) push += c.clip.label == Label::Push;
    CHECK(push == np);
  }
  const auto corpus = gen_corpus(2, 2, 100, ScenarioParams{});
  CHECK(corpus[1].clip.clip_id == "push_101");
  CHECK(corpus[2].clip.clip_id == "normal_102");
}

TEST_CASE("noise-free push contact frames: pushee lean within 0.5 degrees of the commanded angle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScenarioParams p = params(Scenario::Push, seed);
    p.noise_px = 0.0;
    p.dropout_p = 0.0;
    const SynthClip sc = gen_clip(p);
    REQUIRE(sc.truth.contact.has_value());
    const auto [c0, c1] = *sc.truth.contact;
    for (std::int64_t f = c0; f < c1; ++f) {
      const auto i = static_cast<std::size_t>(f);
      const double measured = *torso_inclination(sc.clip.frames[i].persons[1]);
      CHECK(std::fabs(measured - sc.truth.frames[i].actors[1].torso_incl) <= 0.5);
      const double gt = sc.truth.frames[i].actors[1].torso_incl;
      CHECK(gt >= 21.0 - 2.5);
      CHECK(gt <= 29.0 + 2.5);
      const ActorAngles& a = sc.truth.frames[i].actors[0];
      CHECK(a.abduct_l > 80.0);
      CHECK(a.elbow_r > 155.0);
    }
  }
}

TEST_CASE("normal clips stay upright with arms low") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SynthClip sc = gen_clip(params(Scenario::Normal, seed));
    CHECK_FALSE(sc.truth.contact.has_value());
    for (const auto& gt : sc.truth.frames)
      for (const auto& a : gt.actors) {
        CHECK(a.torso_incl <= 7.0);
        CHECK(a.abduct_l <= 30.0);
        CHECK(a.abduct_r <= 30.0);
      }
  }
}

TEST_CASE("noise-free push contact and normal frames occupy disjoint feature ranges") {
  // Push contact: pusher arm raised and partner leaning. Normal: neither.
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    for (Scenario sc : {Scenario::Push, Scenario::Normal}) {
      ScenarioParams p = params(sc, 300 + seed);
      p.noise_px = 0.0;
      p.dropout_p = 0.0;
      const SynthClip clip = gen_clip(p);
      std::int64_t c0 = 0, c1 = p.n_frames;
      if (sc == Scenario::Push) std::tie(c0, c1) = *clip.truth.contact;
      for (std::int64_t f = c0; f < c1; ++f) {
        const auto& persons = clip.clip.frames[static_cast<std::size_t>(f)].persons;
        const FeatureVector a = compute_features(persons[0]), b = compute_features(persons[1]);
        const double abduct_max = std::max(a[Feature::AbductLeft], a[Feature::AbductRight]);
        if (sc == Scenario::Push) {
          CHECK(abduct_max > 60.0);
          CHECK(b[Feature::TorsoIncl] > 15.0);
        } else {
          for (const FeatureVector* v : {&a, &b}) {
            CHECK(std::max((*v)[Feature::AbductLeft], (*v)[Feature::AbductRight]) <= 30.5);
            CHECK((*v)[Feature::TorsoIncl] <= 8.0);
          }
        }
      }
    }
  }
}

TEST_CASE("generated clips validate and survive a parse round trip") {
  for (const ScenarioParams& tmpl : {ScenarioParams::close_range(), ScenarioParams::far_surveillance()}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      ScenarioParams p = tmpl;
      p.scenario = seed % 2 ? Scenario::Push : Scenario::Normal;
      p.seed = seed;
      const SynthClip sc = gen_clip(p);
      CHECK(sc.clip.resolution == tmpl.resolution);
      CHECK(sc.clip.frames.size() == static_cast<std::size_t>(p.n_frames));
      for (const auto& f : sc.clip.frames) {
        CHECK(f.persons.size() == 2);
        for (const auto& s : f.persons) CHECK_NOTHROW(validate(s));
      }
      CHECK(parse_clip(serialize_clip(sc.clip)) == sc.clip);
    }
  }
}

TEST_CASE("render_pose keeps limb segments rigid") {
  const BodyShape body{90, 66, 48, 51, 45, 72, 69, 30};
  for (double lean : {-25.0, 0.0, 12.0})
    for (double abd : {0.0, 45.0, 90.0})
      for (double elbow : {120.0, 170.0, 180.0}) {
        ActorPose pose;
        pose.hip_mid = {400, 500};
        pose.lean_deg = lean;
        pose.abduct_l = pose.abduct_r = abd;
        pose.elbow_l = pose.elbow_r = elbow;
        const auto k = render_pose(pose, body);
        auto at = [&](Joint j) { return k[index(j)]; };
        CHECK(dist(at(Joint::LeftShoulder), at(Joint::LeftElbow)) == doctest::Approx(body.upper_arm));
        CHECK(dist(at(Joint::LeftElbow), at(Joint::LeftWrist)) == doctest::Approx(body.forearm));
        CHECK(dist(at(Joint::RightShoulder), at(Joint::RightElbow)) == doctest::Approx(body.upper_arm));
        CHECK(dist(at(Joint::LeftShoulder), at(Joint::RightShoulder)) == doctest::Approx(body.shoulder_width));
        CHECK(dist(at(Joint::LeftHip), at(Joint::RightHip)) == doctest::Approx(body.hip_width));
        Skeleton s;
        for (std::size_t i = 0; i < kNumKeypoints; ++i) s.keypoints[i] = {k[i].x, k[i].y, 1.0};
        CHECK(*torso_inclination(s) == doctest::Approx(std::fabs(lean)));
        const FeatureVector fv = compute_features(s);
        CHECK(fv[Feature::ElbowLeft] == doctest::Approx(elbow));
      }
}

TEST_CASE("invalid scenario params are rejected") {
  ScenarioParams p;
  p.n_frames = 0;
  CHECK_THROWS_AS(gen_clip(p), Error);
  p = {};
  p.dropout_p = 1.5;
  CHECK_THROWS_AS(gen_clip(p), Error);
  p = {};
  p.noise_px = -1;
  CHECK_THROWS_AS(gen_clip(p), Error);
}
