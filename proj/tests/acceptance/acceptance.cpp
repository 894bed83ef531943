// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pushdet/evaluation.hpp"
#include "pushdet/forest.hpp"
#include "pushdet/kinematics.hpp"
#include "pushdet/rng.hpp"
#include "pushdet/stream.hpp"
#include "pushdet/synth.hpp"
#include "pushdet/tracker.hpp"

using namespace pushdet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<ClipRecord> clips_of(const std::vector<SynthClip>& corpus) {
  std::vector<ClipRecord> out;
  for (const auto& sc : corpus) out.push_back(sc.clip);
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- AC1 -------------------------------------------------------------------

Outcome angle_oracle() {
  const auto t0 = Clock::now();
  SplitMix64 rng(20240501);
  long double worst = 0;
  std::size_t n = 0;
  while (n < 100000) {
    const Point2 a{rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)};
    const Point2 b{rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)};
    const Point2 c{rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)};
    if (std::hypot(a.x - b.x, a.y - b.y) < 1e-6 || std::hypot(c.x - b.x, c.y - b.y) < 1e-6) continue;
    const long double err = std::fabs((long double)joint_angle(a, b, c) - oracle::angle_atan2(a.x, a.y, b.x, b.y, c.x, c.y));
    worst = std::max(worst, err);
    ++n;
  }
  const double e90 = std::fabs(joint_angle({1, 0}, {0, 0}, {0, 1}) - 90.0);
  const double e180 = std::fabs(joint_angle({1, 0}, {0, 0}, {-1, 0}) - 180.0);
  const double e45 = std::fabs(joint_angle({2, 0}, {0, 0}, {1, 1}) - 45.0);
  const double secs = seconds_since(t0);
  const bool ok = worst <= 1e-9L && e90 <= 1e-12 && e180 <= 1e-12 && e45 <= 1e-12 && secs < 1.0;
  return {ok, "1e5 triples, max |err| " + fmt("%.3g", (double)worst) + " deg; analytic errs " + fmt("%.1g", e90) +
                  "/" + fmt("%.1g", e180) + "/" + fmt("%.1g", e45) + "; " + fmt("%.3f", secs) + " s"};
}

// --- AC2 -------------------------------------------------------------------

Outcome forest_determinism() {
  const auto corpus = gen_corpus(15, 15, 7000, ScenarioParams{});
  std::vector<PairSample> samples = collect_pair_samples(clips_of(corpus), {});
  // Interleave clips so both labels are present in the first 1000.
  std::vector<PairSample> push, normal;
  for (auto& s : samples) (s.label == Label::Push ? push : normal).push_back(std::move(s));
  samples.clear();
  for (std::size_t i = 0; samples.size() < 1000 && (i < push.size() || i < normal.size()); ++i) {
    if (i < push.size()) samples.push_back(push[i]);
    if (samples.size() < 1000 && i < normal.size()) samples.push_back(normal[i]);
  }
  if (samples.size() != 1000) return {false, "could not assemble 1000 samples"};

  ForestParams p;  // 100 trees, seed 42, min_split 2, min_leaf 1
  const auto t0 = Clock::now();
  const std::string first = save_model(train_on_samples(samples, FeatureSet::Full9, p, {1}));
  const std::string second = save_model(train_on_samples(samples, FeatureSet::Full9, p, {1}));
  const std::string parallel = save_model(train_on_samples(samples, FeatureSet::Full9, p, {4}));
  const double secs = seconds_since(t0);
  const bool ok = first == second && first == parallel && secs < 30.0;
  return {ok, std::string("1000 samples x 100 trees; repeat ") + (first == second ? "identical" : "DIFFERS") +
                  ", 4 threads " + (first == parallel ? "identical" : "DIFFERS") + "; " + fmt("%.2f", secs) +
                  " s for 3 fits"};
}

// --- AC3 -------------------------------------------------------------------

bool same_tree(const Tree& t, const oracle::OracleNode& root) {
  std::vector<const oracle::OracleNode*> stack{&root};
  std::size_t i = 0;
  while (!stack.empty()) {
    const oracle::OracleNode* o = stack.back();
    stack.pop_back();
    if (i >= t.nodes.size()) return false;
    const TreeNode& n = t.nodes[i++];
    if (n.is_leaf() != o->leaf) return false;
    if (o->leaf) {
      if (n.counts[0] != (std::uint64_t)o->counts[0] || n.counts[1] != (std::uint64_t)o->counts[1]) return false;
    } else {
      if (n.feature != o->feature || n.threshold != o->threshold) return false;
      stack.push_back(&o->children[1]);
      stack.push_back(&o->children[0]);
    }
  }
  return i == t.nodes.size();
}

Outcome tree_oracle() {
  std::size_t matched = 0, splits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SplitMix64 rng(seed + 300);
    const std::size_t n = 5 + rng.below(8);  // 5..12
    const std::size_t dim = 1 + rng.below(3);
    std::vector<oracle::Row> rows;
    TrainingSet ts(dim);
    for (std::size_t i = 0; i < n; ++i) {
      oracle::Row r{std::vector<double>(dim), static_cast<int>(rng.below(2))};
      for (auto& v : r.x) v = static_cast<double>(rng.below(5));
      ts.add(r.x, r.y ? Label::Push : Label::Normal);
      rows.push_back(std::move(r));
    }
    ForestParams p;
    p.bootstrap = false;
    p.max_features = dim;
    p.max_depth = 2;
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    SplitMix64 tree_rng(seed);
    const Tree t = grow_tree(ts, all, p, tree_rng);
    matched += same_tree(t, oracle::brute_force_tree(rows, 0, 2, 2, 1));
    for (const auto& node : t.nodes) splits += !node.is_leaf();
  }
  return {matched == 20, std::to_string(matched) + "/20 depth-2 trees equal the exhaustive search (" +
                             std::to_string(splits) + " internal nodes checked)"};
}

// --- AC4 -------------------------------------------------------------------

Outcome tracker_stability() {
  std::size_t stable = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScenarioParams p = ScenarioParams::far_surveillance();
    p.scenario = seed % 2 ? Scenario::Push : Scenario::Normal;
    p.seed = 9000 + seed;
    ClipRecord clip = gen_clip(p).clip;
    // Keep actor B in its own lane so the actors never overlap.
    bool disjoint = true;
    for (auto& f : clip.frames) {
      Skeleton& b = f.persons[1];
      b.bbox.x += 900;
      for (auto& k : b.keypoints) k.x += 900;
      disjoint = disjoint && iou(f.persons[0].bbox, b.bbox) == 0.0;
    }
    if (!disjoint) return {false, "fixture error: actors overlap in clip " + clip.clip_id};
    const TrackedClip tc = track_clip(clip);
    std::array<std::set<TrackId>, 2> ids;
    for (const auto& f : tc.frames)
      for (std::size_t i = 0; i < 2; ++i) ids[i].insert(f.persons[i].track_id);
    stable += ids[0].size() == 1 && ids[1].size() == 1 && *ids[0].begin() != *ids[1].begin();
  }

  // 2x2 crossing instances: two tracks, two detections.
  SplitMix64 rng(77);
  std::size_t eligible = 0, agree = 0;
  for (int trial = 0; trial < 20000 && eligible < 500; ++trial) {
    const double w = 40, h = 100;
    const BBox t1{rng.uniform(0, 40), rng.uniform(0, 10), w, h}, t2{rng.uniform(0, 40), rng.uniform(0, 10), w, h};
    const BBox d1{rng.uniform(0, 40), rng.uniform(0, 10), w, h}, d2{rng.uniform(0, 40), rng.uniform(0, 10), w, h};
    const std::array<std::array<double, 2>, 2> m{{{iou(t1, d1), iou(t1, d2)}, {iou(t2, d1), iou(t2, d2)}}};
    // Greedy-optimal conditions: all pairs admissible, no ties, and the single
    // largest IoU lies on the best-sum assignment.
    const std::set<double> distinct{m[0][0], m[0][1], m[1][0], m[1][1]};
    if (distinct.size() != 4 || *distinct.begin() < 0.3) continue;
    const bool identity = oracle::identity_is_best(m);
    if (m[0][0] + m[1][1] == m[0][1] + m[1][0]) continue;
    const double top = *distinct.rbegin();
    const bool top_on_identity = top == m[0][0] || top == m[1][1];
    if (top_on_identity != identity) continue;
    ++eligible;

    Tracker tracker;
    FrameDetections f0{0, 0, {}}, f1{1, 33, {}};
    for (const BBox& b : {t1, t2}) f0.persons.push_back(Skeleton{{}, b, 1.0, std::nullopt});
    for (const BBox& b : {d1, d2}) f1.persons.push_back(Skeleton{{}, b, 1.0, std::nullopt});
    tracker.step(f0);
    const TrackedFrame out = tracker.step(f1);
    const bool got_identity = out.persons[0].track_id == 1 && out.persons[1].track_id == 2;
    agree += got_identity == identity;
  }
  const bool ok = stable == 50 && eligible >= 100 && agree == eligible;
  return {ok, std::to_string(stable) + "/50 zero-overlap clips keep one id per actor; " + std::to_string(agree) + "/" +
                  std::to_string(eligible) + " 2x2 crossings equal brute force"};
}

// --- AC5 -------------------------------------------------------------------

struct Reproduction {
  double normal_diag = 0, push_diag = 0;
  std::string text;
};

Reproduction reproduce(const ScenarioParams& tmpl, std::uint64_t base_seed, ForestModel* model_out = nullptr) {
  const std::vector<ClipRecord> clips = clips_of(gen_corpus(45, 45, base_seed, tmpl));
  const SplitSpec split{0.8, 0.1, 0.1, 42, true};
  const ClipSplit parts = split_clips(clips, split);
  const PipelineConfig cfg;
  const ForestModel model = train_on_samples(collect_pair_samples(parts.train, cfg), FeatureSet::Full9, {});
  const EvaluationResult r = evaluate_clips(model, parts.test, cfg);
  const auto rows = normalize_rows(r.clip_level);
  Reproduction out;
  out.normal_diag = rows[0] ? (*rows[0])[0] : 0.0;
  out.push_diag = rows[1] ? (*rows[1])[1] : 0.0;
  out.text = format_rate(out.normal_diag) + "/" + format_rate(out.push_diag) + " over " +
             std::to_string(parts.test.size()) + " test clips";
  if (model_out) *model_out = model;
  return out;
}

Outcome end_to_end(ForestModel& model) {
  const auto t0 = Clock::now();
  const Reproduction close = reproduce(ScenarioParams::close_range(), 1000, &model);
  const Reproduction far = reproduce(ScenarioParams::far_surveillance(), 1000);
  const double secs = seconds_since(t0);
  const bool ok = close.normal_diag >= 0.85 && close.push_diag >= 0.85 && far.normal_diag >= 0.60 &&
                  far.push_diag >= 0.60 && secs < 120.0;
  return {ok, "45/45 corpus, 80/10/10: default noise diag " + close.text + "; far preset diag " + far.text + "; " +
                  fmt("%.1f", secs) + " s"};
}

// --- AC6 -------------------------------------------------------------------

Outcome metrics() {
  constexpr Label N = Label::Normal, P = Label::Push;
  std::vector<std::string> failed;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) failed.push_back(what);
  };

  const auto r1 = normalize_rows(confusion({N, N, P, P}, {N, P, P, P}));
  expect((*r1[0])[0] == 0.5 && (*r1[0])[1] == 0.5 && (*r1[1])[0] == 0.0 && (*r1[1])[1] == 1.0, "worked example");

  const auto r2 = normalize_rows(confusion({N, N, P}, {N, N, P}));
  expect((*r2[0])[0] == 1.0 && (*r2[1])[1] == 1.0, "identity");

  ConfusionMatrix quarter_miss;
  quarter_miss.counts = {{{4, 0}, {1, 3}}};
  const auto r3 = normalize_rows(quarter_miss);
  expect(format_rate((*r3[0])[0]) == "1.00" && format_rate((*r3[0])[1]) == "0.00" &&
             format_rate((*r3[1])[0]) == "0.25" && format_rate((*r3[1])[1]) == "0.75",
         "[[1.00, 0.00], [0.25, 0.75]] table");

  ConfusionMatrix cm;
  cm.counts = {{{9, 1}, {1, 9}}};
  PrecisionRecall pr = precision_recall(cm);
  expect(pr.precision && std::fabs(*pr.precision - 0.9) < 1e-15 && pr.recall && std::fabs(*pr.recall - 0.9) < 1e-15,
         "precision/recall 0.9");
  cm.counts = {{{10, 0}, {0, 10}}};
  pr = precision_recall(cm);
  expect(pr.precision == 1.0 && pr.recall == 1.0, "precision/recall 1.0");
  cm.counts = {{{6, 0}, {4, 0}}};
  pr = precision_recall(cm);
  expect(!pr.precision && pr.recall == 0.0 && format_rate(pr.precision) == "n/a", "undefined precision");

  expect(decide_clip({}, {}) == N, "empty clip");
  std::vector<Label> frames(10, N);
  frames[0] = frames[1] = frames[2] = P;
  expect(decide_clip(frames, {}) == P, "3/10 push");
  frames[2] = N;
  expect(decide_clip(frames, {}) == N, "2/10 push");

  std::string detail = "confusion, normalization, precision/recall, decision examples";
  for (const auto& f : failed) detail += "; FAILED " + f;
  if (failed.empty()) detail += "; counts [[4,0],[1,3]] render 1.00/0.00, 0.25/0.75";
  return {failed.empty(), detail};
}

// --- AC7 / AC8 -------------------------------------------------------------

std::vector<FrameDetections> long_stream(std::size_t n_frames) {
  std::vector<FrameDetections> frames;
  std::int64_t offset = 0;
  for (std::uint64_t seed = 0; frames.size() < n_frames; ++seed) {
    ScenarioParams p;
    p.scenario = seed % 2 ? Scenario::Push : Scenario::Normal;
    p.seed = 40000 + seed;
    p.n_frames = 200;
    for (auto f : gen_clip(p).clip.frames) {
      if (frames.size() == n_frames) break;
      f.frame_idx += offset;
      f.ts_ms += offset * 33;
      frames.push_back(std::move(f));
    }
    offset += 200;
  }
  return frames;
}

Outcome throughput(const ForestModel& model) {
  const auto frames = long_stream(5000);
  StreamRunner warm(model, {});
  for (std::size_t i = 0; i < 200; ++i) warm.process(frames[i]);

  StreamRunner runner(model, {});
  std::size_t pairs = 0;
  const auto t0 = Clock::now();
  for (const auto& f : frames) pairs += runner.process(f).pairs.size();
  const double secs = seconds_since(t0);
  const double fps = static_cast<double>(frames.size()) / secs;
  return {fps >= 1000.0, fmt("%.0f", fps) + " frames/s single-threaded (" + std::to_string(frames.size()) +
                             " 2-person frames, " + std::to_string(pairs) + " pairs classified)"};
}

Outcome replay(const ForestModel& model) {
  const auto dir = std::filesystem::temp_directory_path() / "pushdet_acceptance";
  std::filesystem::create_directories(dir);
  const auto path = dir / "stream_10k.jsonl";
  {
    std::ofstream out(path);
    const FrameHeader header{"live", std::nullopt, {848, 848}};
    for (const auto& f : long_stream(10000)) out << serialize_frame(header, f) << '\n';
  }
  auto run = [&](unsigned threads) {
    std::ifstream in(path);
    std::ostringstream out, log;
    RunConfig cfg;
    cfg.threads = threads;
    const RunSummary s = run_stream(in, out, log, model, cfg);
    return std::make_pair(out.str(), s.events);
  };
  const auto [first, events] = run(1);
  bool same = true;
  for (unsigned threads : {1u, 1u, 2u, 4u}) same = same && run(threads).first == first;
  std::filesystem::remove_all(dir);
  return {same && events == 10000, std::to_string(events) + " events; 3 single-thread runs and 2/4-thread runs " +
                                       (same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* name, const Outcome& o) {
    std::printf("%s %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report("AC1", "angle oracle", angle_oracle());
  report("AC2", "forest determinism", forest_determinism());
  report("AC3", "tree oracle", tree_oracle());
  report("AC4", "tracker stability", tracker_stability());
  ForestModel model;
  report("AC5", "end-to-end synthetic reproduction", end_to_end(model));
  report("AC6", "metrics arithmetic", metrics());
  report("AC7", "throughput", throughput(model));
  report("AC8", "replay determinism", replay(model));

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
