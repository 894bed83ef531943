// pushdet: command-line front end for the push-detection pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pushdet/error.hpp"
#include "pushdet/evaluation.hpp"
#include "pushdet/forest.hpp"
#include "pushdet/interaction.hpp"
#include "pushdet/kinematics.hpp"
#include "pushdet/skeleton.hpp"
#include "pushdet/stream.hpp"
#include "pushdet/synth.hpp"
#include "pushdet/tracker.hpp"
#include "pushdet/version.hpp"

namespace fs = std::filesystem;
using namespace pushdet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Parse:
    case Errc::Schema:
    case Errc::Sequencing:
    case Errc::Validation:
    case Errc::DegenerateGeometry:
    case Errc::Domain:
      return kExitInput;
    default:
      return kExitConfig;
  }
}

/// `-` or empty means the standard stream.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw Error(Errc::Config, "cannot open " + path);
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error(Errc::Config, "cannot write " + path);
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct PipelineFlags {
  PipelineConfig cfg;
  int features = 9;

  void attach(CLI::App& app, bool with_decision) {
    app.add_option("--iou-min", cfg.tracker.iou_min, "tracker IoU acceptance threshold")->capture_default_str();
    app.add_option("--max-age", cfg.tracker.max_age, "frames before an unmatched track retires")->capture_default_str();
    app.add_option("--history-cap", cfg.tracker.history_cap, "per-track skeleton history length")->capture_default_str();
    app.add_option("--kp-conf-min", cfg.kinematics.kp_conf_min, "keypoint confidence floor")->capture_default_str();
    app.add_option("--impute-window", cfg.kinematics.impute_window, "frames a missing angle may be carried forward")
        ->capture_default_str();
    app.add_option("--kappa", cfg.gate.kappa, "pair gate, in units of bbox height")->capture_default_str();
    app.add_option("--features", features, "per-person feature set: 4 or 9")->check(CLI::IsMember({4, 9}))->capture_default_str();
    if (with_decision)
      app.add_option("--tau", cfg.decision.tau_clip, "push-frame share that flags a clip/window")->capture_default_str();
  }

  PipelineConfig resolve() const {
    PipelineConfig out = cfg;
    out.kinematics.feature_set = feature_set_from_count(features);
    out.tracker.validate();
    out.kinematics.validate();
    out.gate.validate();
    out.decision.validate();
    return out;
  }
};

struct SplitFlags {
  std::string fractions = "0.8,0.1,0.1";
  std::uint64_t seed = 42;
  std::string subset = "test";

  void attach(CLI::App& app, const std::string& default_subset) {
    subset = default_subset;
    app.add_option("--split", fractions, "train,val,test fractions")->capture_default_str();
    app.add_option("--seed", seed, "split seed")->capture_default_str();
    app.add_option("--subset", subset, "which bucket to use")
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
  }

  std::vector<ClipRecord> select(const std::vector<ClipRecord>& clips) const {
    if (subset == "all") return clips;
    ClipSplit split = split_clips(clips, parse_split_fractions(fractions, seed));
    if (subset == "train") return split.train;
    if (subset == "val") return split.val;
    return split.test;
  }
};

// ---- synth ----------------------------------------------------------------

struct SynthCmd {
  std::string scenario = "push";
  std::size_t count = 45;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string preset = "close";
  std::int64_t frames = 60;
  std::optional<double> noise, dropout, scale;

  void attach(CLI::App& app) {
    app.add_option("--scenario", scenario)->check(CLI::IsMember({"push", "normal"}))->capture_default_str();
    app.add_option("--n", count, "number of clips")->capture_default_str();
    app.add_option("--seed", seed, "seed of the first clip; clip i uses seed + i")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--preset", preset, "close (848x848, 1px, 2%) or far (1920x1080, 4px, 10%)")
        ->check(CLI::IsMember({"close", "far"}))
        ->capture_default_str();
    app.add_option("--frames", frames, "frames per clip")->capture_default_str();
    app.add_option("--noise", noise, "keypoint jitter std-dev in pixels");
    app.add_option("--dropout", dropout, "per-keypoint low-confidence probability");
    app.add_option("--scale", scale, "person height in pixels");
  }

  int run() const {
    ScenarioParams p = preset == "far" ? ScenarioParams::far_surveillance() : ScenarioParams::close_range();
    p.scenario = scenario == "push" ? Scenario::Push : Scenario::Normal;
    p.n_frames = frames;
    if (noise) p.noise_px = *noise;
    if (dropout) p.dropout_p = *dropout;
    if (scale) p.scale = *scale;
    p.validate();

    fs::create_directories(out_dir);
    std::vector<GroundTruth> truths;
    const fs::path gt_path = fs::path(out_dir) / "ground_truth.json";
    std::vector<nlohmann::ordered_json> kept;
    if (fs::exists(gt_path)) {
      // Merge with clips written by earlier invocations into the same directory.
      std::ifstream in(gt_path);
      auto doc = nlohmann::ordered_json::parse(in, nullptr, false);
      if (!doc.is_discarded() && doc.contains("clips") && doc["clips"].is_array())
        for (auto& c : doc["clips"]) kept.push_back(c);
    }
    for (std::size_t i = 0; i < count; ++i) {
      p.seed = seed + i;
      SynthClip clip = gen_clip(p);
      write_clip_file((fs::path(out_dir) / (clip.clip.clip_id + ".jsonl")).string(), clip.clip);
      truths.push_back(std::move(clip.truth));
    }
    auto fresh = nlohmann::ordered_json::parse(ground_truth_json(truths));
    std::map<std::string, nlohmann::ordered_json> merged;
    for (auto& c : kept) merged[c["clip_id"].get<std::string>()] = c;
    for (auto& c : fresh["clips"]) merged[c["clip_id"].get<std::string>()] = c;
    nlohmann::ordered_json doc{{"clips", nlohmann::ordered_json::array()}};
    for (auto& [id, c] : merged) doc["clips"].push_back(c);
    std::ofstream(gt_path, std::ios::binary) << doc.dump() << '\n';
    std::cerr << "wrote " << count << ' ' << scenario << " clips to " << out_dir << '\n';
    return kExitOk;
  }
};

// ---- track ----------------------------------------------------------------

struct TrackCmd {
  std::string in, out;
  PipelineFlags flags;

  void attach(CLI::App& app) {
    app.add_option("--in", in, "clip JSONL (default stdin)");
    app.add_option("--out", out, "tracked JSONL (default stdout)");
    flags.attach(app, false);
  }

  int run() {
    const PipelineConfig cfg = flags.resolve();
    Input input(in);
    const ClipRecord clip = parse_clip(input.get());
    Output output(out);
    output.get() << serialize_clip(to_clip_record(track_clip(clip, cfg.tracker)));
    return kExitOk;
  }
};

// ---- extract --------------------------------------------------------------

struct ExtractCmd {
  std::string in, clips_dir, out;
  bool pairs = false;
  PipelineFlags flags;
  SplitFlags split;

  void attach(CLI::App& app) {
    app.add_option("--in", in, "clip JSONL (default stdin)");
    app.add_option("--clips", clips_dir, "directory of clip JSONL files instead of --in");
    app.add_option("--out", out, "CSV destination (default stdout)");
    app.add_flag("--pairs", pairs, "emit gated pair samples instead of per-person rows");
    flags.attach(app, false);
    split.attach(app, "all");
  }

  int run() {
    const PipelineConfig cfg = flags.resolve();
    std::vector<ClipRecord> clips;
    if (!clips_dir.empty()) {
      clips = split.select(load_clip_dir(clips_dir));
    } else {
      Input input(in);
      clips.push_back(parse_clip(input.get()));
    }
    Output output(out);
    std::ostream& os = output.get();
    if (pairs) {
      write_pairs_csv(os, collect_pair_samples(clips, cfg), 2 * per_person_dim(cfg.kinematics.feature_set));
      return kExitOk;
    }
    os << "clip_id,frame,tid";
    for (auto name : kFeatureNames) os << ',' << name;
    os << ",mask\n";
    for (const ClipRecord& clip : clips) {
      const TrackedClip tracked = ensure_tracked(clip, cfg.tracker);
      std::map<TrackId, ImputationState> states;
      for (const TrackedFrame& f : tracked.frames)
        for (const TrackedPerson& p : f.persons) {
          const FeatureVector fv = extract_features(p.skeleton, f.frame_idx, states[p.track_id], cfg.kinematics);
          os << clip.clip_id << ',' << f.frame_idx << ',' << p.track_id;
          for (std::size_t i = 0; i < kNumFeatures; ++i)
            os << ',' << (fv.mask[i] == EntryState::Invalid ? std::string() : format_number(fv.values[i]));
          os << ',' << fv.mask_string() << '\n';
        }
    }
    return kExitOk;
  }
};

// ---- train / predict ------------------------------------------------------

std::vector<PairSample> load_pairs(const std::string& path) {
  Input input(path);
  return read_pairs_csv(input.get());
}

// Keeps the first `per_person` entries of each half of an 18-wide row.
std::vector<PairSample> narrow(std::vector<PairSample> samples, std::size_t per_person) {
  for (PairSample& s : samples) {
    const std::size_t half = s.features.size() / 2;
    if (half == per_person) continue;
    if (s.features.size() % 2 != 0 || half < per_person)
      throw Error(Errc::Validation, "pair rows have " + std::to_string(s.features.size()) +
                                        " features; cannot select " + std::to_string(per_person) + " per person");
    std::vector<double> kept(s.features.begin(), s.features.begin() + static_cast<std::ptrdiff_t>(per_person));
    kept.insert(kept.end(), s.features.begin() + static_cast<std::ptrdiff_t>(half),
                s.features.begin() + static_cast<std::ptrdiff_t>(half + per_person));
    s.features = std::move(kept);
  }
  return samples;
}

struct TrainCmd {
  std::string pairs, out;
  ForestParams params;
  std::optional<std::size_t> max_features, max_depth;
  int features = 9;
  unsigned threads = 1;

  void attach(CLI::App& app) {
    app.add_option("--pairs", pairs, "pair-sample CSV from `extract --pairs`")->required();
    app.add_option("--out", out, "model JSON path")->required();
    app.add_option("--trees", params.n_trees)->capture_default_str();
    app.add_option("--seed", params.seed)->capture_default_str();
    app.add_option("--min-split", params.min_samples_split)->capture_default_str();
    app.add_option("--min-leaf", params.min_samples_leaf)->capture_default_str();
    app.add_option("--max-features", max_features, "default floor(sqrt(d))");
    app.add_option("--max-depth", max_depth, "default unbounded");
    app.add_option("--features", features, "per-person feature set: 4 or 9")->check(CLI::IsMember({4, 9}))->capture_default_str();
    app.add_option("--threads", threads, "tree-building threads (model bytes do not depend on it)")->capture_default_str();
  }

  int run() {
    const FeatureSet fs = feature_set_from_count(features);
    params.max_features = max_features;
    params.max_depth = max_depth;
    const auto samples = narrow(load_pairs(pairs), per_person_dim(fs));
    const ForestModel model = train_on_samples(samples, fs, params, {threads});
    save_model_file(out, model);
    std::cerr << "trained " << model.trees.size() << " trees on " << samples.size() << " samples (d = "
              << model.feature_dim << ")\n";
    return kExitOk;
  }
};

struct PredictCmd {
  std::string model_path, pairs, out;

  void attach(CLI::App& app) {
    app.add_option("--model", model_path)->required();
    app.add_option("--pairs", pairs, "pair-sample CSV")->required();
    app.add_option("--out", out, "CSV destination (default stdout)");
  }

  int run() {
    const ForestModel model = load_model_file(model_path);
    const auto samples = narrow(load_pairs(pairs), model.feature_dim / 2);
    Output output(out);
    std::ostream& os = output.get();
    os << "clip_id,frame,tid_a,tid_b";
    for (std::size_t i = 1; i <= model.feature_dim; ++i) os << ",f" << i;
    os << ",label,pred,proba\n";
    for (const PairSample& s : samples) {
      os << s.clip_id << ',' << s.frame_idx << ',' << s.tid_a << ',' << s.tid_b;
      for (double v : s.features) os << ',' << format_number(v);
      os << ',' << (s.label ? to_string(*s.label) : "") << ',' << to_string(model.predict(s.features)) << ','
         << format_number(model.predict_proba(s.features)) << '\n';
    }
    return kExitOk;
  }
};

// ---- eval -----------------------------------------------------------------

struct EvalCmd {
  std::string model_path, clips_dir, json_out;
  PipelineFlags flags;
  SplitFlags split;

  void attach(CLI::App& app) {
    app.add_option("--model", model_path)->required();
    app.add_option("--clips", clips_dir, "directory of labeled clip JSONL files")->required();
    app.add_option("--json", json_out, "write the JSON report here instead of after the text report");
    flags.attach(app, true);
    split.attach(app, "test");
  }

  int run() {
    const ForestModel model = load_model_file(model_path);
    PipelineConfig cfg = flags.resolve();
    if (model.feature_dim == 8) cfg.kinematics.feature_set = FeatureSet::Quad4;
    const auto clips = split.select(load_clip_dir(clips_dir));
    const EvaluationResult r = evaluate_clips(model, clips, cfg);
    const SplitSpec spec = parse_split_fractions(split.fractions, split.seed);
    std::cout << render_report(r, cfg, split.subset);
    const std::string doc = report_json(r, cfg, spec, split.subset);
    if (json_out.empty()) {
      std::cout << '\n' << doc;
    } else {
      Output output(json_out);
      output.get() << doc;
    }
    return kExitOk;
  }
};

// ---- run ------------------------------------------------------------------

struct RunCmd {
  std::string model_path, in, out, alert_mode = "window";
  std::size_t window = 30;
  unsigned threads = 1;
  PipelineFlags flags;

  void attach(CLI::App& app) {
    app.add_option("--model", model_path)->required();
    app.add_option("--in", in, "frame JSONL (default stdin)");
    app.add_option("--out", out, "event JSONL (default stdout)");
    app.add_option("--alert-mode", alert_mode)->check(CLI::IsMember({"window", "frame"}))->capture_default_str();
    app.add_option("--window", window, "sliding alert window in frames")->capture_default_str();
    app.add_option("--threads", threads, "1 = inline; >= 2 adds reader/writer threads")->capture_default_str();
    flags.attach(app, true);
  }

  int run() {
    RunConfig cfg;
    cfg.pipeline = flags.resolve();
    cfg.alert_mode = alert_mode == "frame" ? AlertMode::PerFrame : AlertMode::PerWindow;
    cfg.window_frames = window;
    cfg.threads = threads;
    cfg.validate();
    const ForestModel model = load_model_file(model_path);
    Input input(in);
    Output output(out);
    const RunSummary summary = run_stream(input.get(), output.get(), std::cerr, model, cfg);
    if (summary.input_errors > 0) {
      std::cerr << summary.input_errors << " input error(s); " << summary.events << " events written\n";
      return kExitInput;
    }
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise push detection from human keypoint streams"};
  app.set_config("--config", "", "key=value file mirroring the command-line flags");
  app.set_version_flag("--version", std::string("pushdet ") + kVersion + " (model format_version " +
                                        std::to_string(kModelFormatVersion) + ")");
  app.require_subcommand(1);

  SynthCmd synth;
  TrackCmd track;
  ExtractCmd extract;
  TrainCmd train;
  PredictCmd predict;
  EvalCmd eval;
  RunCmd run;
  synth.attach(*app.add_subcommand("synth", "generate labeled two-actor clips"));
  track.attach(*app.add_subcommand("track", "assign track ids to a clip"));
  extract.attach(*app.add_subcommand("extract", "per-person angle features or pair samples as CSV"));
  train.attach(*app.add_subcommand("train", "fit a random forest on pair samples"));
  predict.attach(*app.add_subcommand("predict", "score pair samples with a model"));
  eval.attach(*app.add_subcommand("eval", "clip-level evaluation on a split of a clip directory"));
  run.attach(*app.add_subcommand("run", "streaming detection on live JSONL frames"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (app.got_subcommand("synth")) return synth.run();
    if (app.got_subcommand("track")) return track.run();
    if (app.got_subcommand("extract")) return extract.run();
    if (app.got_subcommand("train")) return train.run();
    if (app.got_subcommand("predict")) return predict.run();
    if (app.got_subcommand("eval")) return eval.run();
    if (app.got_subcommand("run")) return run.run();
  } catch (const Error& e) {
    std::cerr << "pushdet: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "pushdet: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
