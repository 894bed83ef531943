#include <doctest.h>

#include <sstream>

#include "pushdet/error.hpp"
#include "pushdet/evaluation.hpp"
#include "pushdet/stream.hpp"
#include "pushdet/synth.hpp"

using namespace pushdet;

namespace {

const ForestModel& small_model() {
  static const ForestModel model = [] {
    std::vector<ClipRecord> clips;
    for (const auto& sc : gen_corpus(4, 4, 500, ScenarioParams{})) clips.push_back(sc.clip);
    ForestParams p;
    p.n_trees = 10;
    return train_on_samples(collect_pair_samples(clips, {}), FeatureSet::Full9, p);
  }();
  return model;
}

std::string stream_text(std::size_t clips, std::uint64_t seed) {
  std::string text;
  std::int64_t offset = 0;
  for (const auto& sc : gen_corpus(clips / 2, clips - clips / 2, seed, ScenarioParams{})) {
    ClipRecord c = sc.clip;
    for (auto& f : c.frames) {
      f.frame_idx += offset;
      f.ts_ms += offset * 33;
    }
    offset += static_cast<std::int64_t>(c.frames.size()) + 40;  // gap long enough to retire tracks
    text += serialize_clip(c);
  }
  return text;
}

std::string run_text(const std::string& input, unsigned threads, RunSummary* summary = nullptr,
                     std::string* log_text = nullptr) {
  std::istringstream in(input);
  std::ostringstream out, log;
  RunConfig cfg;
  cfg.threads = threads;
  const RunSummary s = run_stream(in, out, log, small_model(), cfg);
  if (summary) *summary = s;
  if (log_text) *log_text = log.str();
  return out.str();
}

}  // namespace

TEST_CASE("event serialization") {
  FrameEvent e{12, {{1, 2, Label::Push, 0.63}}, true};
  CHECK(serialize_event(e) == "{\"frame\": 12, \"pairs\": [{\"a\": 1, \"b\": 2, \"pred\": \"push\", \"proba\": 0.63}], \"alert\": true}");
  CHECK(serialize_event({3, {}, false}) == "{\"frame\": 3, \"pairs\": [], \"alert\": false}");
}

TEST_CASE("frames with fewer than two people produce no pairs and no alert") {
  StreamRunner r(small_model(), {});
  const SynthClip sc = gen_clip(ScenarioParams{});
  for (auto f : sc.clip.frames) {
    f.persons.resize(1);
    const FrameEvent e = r.process(f);
    CHECK(e.pairs.empty());
    CHECK_FALSE(e.alert);
  }
}

TEST_CASE("one event per input frame; identical output across runs and thread counts") {
  const std::string input = stream_text(6, 900);
  RunSummary s;
  const std::string a = run_text(input, 1, &s);
  CHECK(s.events == 6 * 60);
  CHECK(s.input_errors == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 6 * 60);
  CHECK(run_text(input, 1) == a);
  CHECK(run_text(input, 2) == a);
  CHECK(run_text(input, 4) == a);
}

TEST_CASE("malformed lines are logged and skipped") {
  std::string input = stream_text(2, 40);
  const auto cut = input.find('\n', input.size() / 2);
  input.insert(cut + 1, "{garbage\n");
  RunSummary s;
  std::string log;
  const std::string out = run_text(input, 1, &s, &log);
  CHECK(s.input_errors == 1);
  CHECK(s.events == 120);
  CHECK(log.find("line") != std::string::npos);
  CHECK(run_text(input, 3) == out);
}

TEST_CASE("out-of-order frames are rejected without disturbing state") {
  StreamRunner r(small_model(), {});
  const SynthClip sc = gen_clip(ScenarioParams{});
  r.process(sc.clip.frames[5]);
  CHECK_THROWS_AS(r.process(sc.clip.frames[2]), Error);
  CHECK_NOTHROW(r.process(sc.clip.frames[6]));
}

TEST_CASE("model and feature-set mismatch is a config error") {
  RunConfig cfg;
  cfg.pipeline.kinematics.feature_set = FeatureSet::Quad4;
  try {
    StreamRunner r(small_model(), cfg);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Config);
  }
}

TEST_CASE("memory stays bounded on a long stream") {
  StreamRunner r(small_model(), {});
  std::int64_t offset = 0;
  for (const auto& sc : gen_corpus(5, 5, 1, ScenarioParams{})) {
    for (auto f : sc.clip.frames) {
      f.frame_idx += offset;
      r.process(f);
      CHECK(r.window_size() <= 30);
      CHECK(r.live_tracks() <= 4);
      CHECK(r.feature_states() <= 4);
    }
    offset += 60;
  }
}

TEST_CASE("a streamed push clip raises the alert inside contact plus one window") {
  // Training labels are per clip, so approach frames may alert too; only the
  // contact interval (extended by the window) is required to alert.
  for (std::uint64_t seed : {600u, 601u, 602u}) {
    ScenarioParams p;
    p.scenario = Scenario::Push;
    p.seed = seed;
    const SynthClip sc = gen_clip(p);
    const auto [c0, c1] = *sc.truth.contact;
    StreamRunner r(small_model(), {});
    bool alerted = false;
    for (const auto& f : sc.clip.frames) {
      const FrameEvent e = r.process(f);
      alerted = alerted || (e.alert && e.frame >= c0 && e.frame < c1 + 30);
    }
    CHECK(alerted);
  }
}
