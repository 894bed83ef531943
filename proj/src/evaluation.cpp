#include "pushdet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pushdet/error.hpp"
#include "pushdet/rng.hpp"

namespace pushdet {

void SplitSpec::validate() const {
  for (double f : {train, val, test})
    if (!(f > 0.0) || !std::isfinite(f)) throw Error(Errc::Split, "split fractions must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw Error(Errc::Split, "split fractions must sum to 1");
}

SplitSpec parse_split_fractions(const std::string& text, std::uint64_t seed) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) throw Error(Errc::Split, "bad split fraction '" + item + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw Error(Errc::Split, "split needs three fractions: train,val,test");
  SplitSpec spec{parts[0], parts[1], parts[2], seed, true};
  spec.validate();
  return spec;
}

namespace {

constexpr double kFloorSlack = 1e-9;

// Largest-remainder apportionment of n items over fractions; ties favour the
// earlier bucket.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double quota = static_cast<double>(n) * fractions[k];
    out[k] = static_cast<std::size_t>(std::floor(quota + kFloorSlack));
    rem[k] = quota - static_cast<double>(out[k]);
    assigned += out[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++out[order[i]];
  return out;
}

}  // namespace

SplitIndices split_indices(const std::vector<Label>& labels, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> fractions{spec.train, spec.val, spec.test};
  const std::size_t n = labels.size();

  std::vector<std::vector<std::size_t>> classes;
  if (spec.stratified) {
    if (n < 10) throw Error(Errc::Split, "stratified split needs at least 10 clips");
    classes.resize(2);
    for (std::size_t i = 0; i < n; ++i) classes[static_cast<std::size_t>(labels[i])].push_back(i);
    for (std::size_t c = 0; c < 2; ++c)
      if (classes[c].empty())
        throw Error(Errc::Split, std::string("no clips labeled ") + to_string(static_cast<Label>(c)));
  } else {
    if (n == 0) throw Error(Errc::Split, "nothing to split");
    classes.emplace_back(n);
    std::iota(classes[0].begin(), classes[0].end(), 0);
  }

  // Per-class floors, then hand out the leftovers so bucket totals match the
  // apportionment of the whole set.
  const std::array<std::size_t, 3> target = apportion(n, fractions);
  const std::size_t nc = classes.size();
  std::vector<std::array<std::size_t, 3>> alloc(nc);
  std::vector<std::size_t> leftover(nc);
  std::array<std::ptrdiff_t, 3> deficit{};
  for (std::size_t k = 0; k < 3; ++k) deficit[k] = static_cast<std::ptrdiff_t>(target[k]);
  struct Cand {
    double frac;
    std::size_t c, k;
  };
  std::vector<Cand> cands;
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t used = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double quota = static_cast<double>(classes[c].size()) * fractions[k];
      alloc[c][k] = static_cast<std::size_t>(std::floor(quota + kFloorSlack));
      used += alloc[c][k];
      deficit[k] -= static_cast<std::ptrdiff_t>(alloc[c][k]);
      cands.push_back({quota - static_cast<double>(alloc[c][k]), c, k});
    }
    leftover[c] = classes[c].size() - used;
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.frac > b.frac; });
  for (const Cand& cd : cands) {
    if (cd.frac > kFloorSlack && leftover[cd.c] > 0 && deficit[cd.k] > 0) {
      ++alloc[cd.c][cd.k];
      --leftover[cd.c];
      --deficit[cd.k];
    }
  }
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < 3 && leftover[c] > 0; ++k)
      while (leftover[c] > 0 && deficit[k] > 0) {
        ++alloc[c][k];
        --leftover[c];
        --deficit[k];
      }

  SplitIndices out;
  std::array<std::vector<std::size_t>*, 3> buckets{&out.train, &out.val, &out.test};
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<std::size_t> members = classes[c];
    SplitMix64 rng = SplitMix64::stream(spec.seed, c);
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      buckets[k]->insert(buckets[k]->end(), members.begin() + static_cast<std::ptrdiff_t>(pos),
                         members.begin() + static_cast<std::ptrdiff_t>(pos + alloc[c][k]));
      pos += alloc[c][k];
    }
  }
  for (auto* b : buckets) std::sort(b->begin(), b->end());
  return out;
}

ClipSplit split_clips(const std::vector<ClipRecord>& clips, const SplitSpec& spec) {
  std::vector<Label> labels;
  labels.reserve(clips.size());
  for (const ClipRecord& c : clips) {
    if (!c.label) throw Error(Errc::Split, "clip " + c.clip_id + " has no label");
    labels.push_back(*c.label);
  }
  const SplitIndices idx = split_indices(labels, spec);
  ClipSplit out;
  for (std::size_t i : idx.train) out.train.push_back(clips[i]);
  for (std::size_t i : idx.val) out.val.push_back(clips[i]);
  for (std::size_t i : idx.test) out.test.push_back(clips[i]);
  return out;
}

void ClipDecisionConfig::validate() const {
  if (!(tau_clip > 0.0 && tau_clip <= 1.0)) throw Error(Errc::Config, "tau_clip must lie in (0, 1]");
}

Label decide_clip(const std::vector<Label>& frame_preds, const ClipDecisionConfig& cfg) {
  if (frame_preds.empty()) return Label::Normal;
  const auto push = std::count(frame_preds.begin(), frame_preds.end(), Label::Push);
  const double share = static_cast<double>(push) / static_cast<double>(frame_preds.size());
  return share >= cfg.tau_clip ? Label::Push : Label::Normal;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

ConfusionMatrix confusion(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  if (truth.size() != pred.size()) throw Error(Errc::Validation, "truth and prediction lengths differ");
  if (truth.empty()) throw Error(Errc::Validation, "no labels to compare");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  return cm;
}

std::array<NormalizedRow, 2> normalize_rows(const ConfusionMatrix& cm) {
  std::array<NormalizedRow, 2> out;
  for (std::size_t r = 0; r < 2; ++r) {
    const std::uint64_t total = cm.counts[r][0] + cm.counts[r][1];
    if (total == 0) continue;
    out[r] = std::array<double, 2>{static_cast<double>(cm.counts[r][0]) / static_cast<double>(total),
                                   static_cast<double>(cm.counts[r][1]) / static_cast<double>(total)};
  }
  return out;
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm, Label positive) {
  const std::size_t p = static_cast<std::size_t>(positive), q = 1 - p;
  const double tp = static_cast<double>(cm.counts[p][p]);
  const double fp = static_cast<double>(cm.counts[q][p]);
  const double fn = static_cast<double>(cm.counts[p][q]);
  PrecisionRecall out;
  if (tp + fp > 0) out.precision = tp / (tp + fp);
  if (tp + fn > 0) out.recall = tp / (tp + fn);
  return out;
}

std::string format_rate(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

std::string render_normalized(const ConfusionMatrix& cm) {
  const auto rows = normalize_rows(cm);
  std::string out = "True / Pred   Normal  Push\n";
  const char* names[2] = {"Normal     ", "Push       "};
  for (std::size_t r = 0; r < 2; ++r) {
    out += names[r];
    for (std::size_t c = 0; c < 2; ++c) {
      out += "   ";
      out += rows[r] ? format_rate((*rows[r])[c]) : std::string("n/a ");
    }
    out += '\n';
  }
  return out;
}

std::vector<PairSample> collect_pair_samples(const std::vector<ClipRecord>& clips, const PipelineConfig& cfg) {
  std::vector<PairSample> out;
  for (const ClipRecord& clip : clips) {
    auto samples = build_pair_samples(ensure_tracked(clip, cfg.tracker), cfg.kinematics, cfg.gate);
    out.insert(out.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  return out;
}

ForestModel train_on_samples(const std::vector<PairSample>& samples, FeatureSet fs, const ForestParams& params,
                             FitOptions options) {
  const std::size_t dim = 2 * per_person_dim(fs);
  TrainingSet data(dim);
  for (const PairSample& s : samples) {
    if (!s.label) throw Error(Errc::Training, "unlabeled pair sample in training data");
    data.add(s.features, *s.label);
  }
  return fit(data, params, pair_feature_names(fs), options);
}

std::vector<Label> frame_predictions(const ForestModel& model, const std::vector<PairSample>& clip_samples) {
  std::vector<Label> out;
  std::optional<std::int64_t> current;
  for (const PairSample& s : clip_samples) {
    const Label pred = model.predict(s.features);
    if (!current || *current != s.frame_idx) {
      out.push_back(pred);
      current = s.frame_idx;
    } else if (pred == Label::Push) {
      out.back() = Label::Push;
    }
  }
  return out;
}

EvaluationResult evaluate_clips(const ForestModel& model, const std::vector<ClipRecord>& clips,
                                const PipelineConfig& cfg) {
  cfg.decision.validate();
  if (model.feature_dim != 2 * per_person_dim(cfg.kinematics.feature_set))
    throw Error(Errc::Config, "model feature_dim " + std::to_string(model.feature_dim) +
                                  " does not match the configured feature set");
  EvaluationResult r;
  std::vector<Label> clip_truth, clip_pred, frame_truth, frame_pred;
  for (const ClipRecord& clip : clips) {
    if (!clip.label) throw Error(Errc::Validation, "clip " + clip.clip_id + " has no label");
    const auto samples = build_pair_samples(ensure_tracked(clip, cfg.tracker), cfg.kinematics, cfg.gate);
    for (const PairSample& s : samples) {
      frame_truth.push_back(*clip.label);
      frame_pred.push_back(model.predict(s.features));
    }
    const std::vector<Label> frames = frame_predictions(model, samples);
    ClipOutcome outcome{clip.clip_id, *clip.label, decide_clip(frames, cfg.decision), frames.size(),
                        static_cast<std::size_t>(std::count(frames.begin(), frames.end(), Label::Push))};
    clip_truth.push_back(outcome.truth);
    clip_pred.push_back(outcome.pred);
    r.clips.push_back(std::move(outcome));
  }
  if (!clip_truth.empty()) r.clip_level = confusion(clip_truth, clip_pred);
  if (!frame_truth.empty()) r.frame_level = confusion(frame_truth, frame_pred);
  return r;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson counts_json(const ConfusionMatrix& cm) {
  return ojson::array({ojson::array({cm.counts[0][0], cm.counts[0][1]}), ojson::array({cm.counts[1][0], cm.counts[1][1]})});
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(quantize(*v)) : ojson(nullptr); }

ojson normalized_json(const ConfusionMatrix& cm) {
  ojson out = ojson::array();
  for (const NormalizedRow& row : normalize_rows(cm))
    out.push_back(row ? ojson::array({quantize((*row)[0]), quantize((*row)[1])}) : ojson(nullptr));
  return out;
}

}  // namespace

std::string render_report(const EvaluationResult& r, const PipelineConfig& cfg, const std::string& subset) {
  std::ostringstream out;
  out << "Evaluated " << r.clips.size() << " clips (" << subset << " subset), tau_clip = " << format_number(cfg.decision.tau_clip)
      << "\n\nClip-level normalized confusion matrix\n"
      << render_normalized(r.clip_level);
  const PrecisionRecall clip_pr = precision_recall(r.clip_level);
  out << "precision " << format_rate(clip_pr.precision) << "  recall " << format_rate(clip_pr.recall) << "\n\n";
  out << "Frame-level (pair samples) normalized confusion matrix\n" << render_normalized(r.frame_level);
  const PrecisionRecall frame_pr = precision_recall(r.frame_level);
  out << "precision " << format_rate(frame_pr.precision) << "  recall " << format_rate(frame_pr.recall) << "\n";
  return out.str();
}

std::string report_json(const EvaluationResult& r, const PipelineConfig& cfg, const SplitSpec& split,
                        const std::string& subset) {
  const PrecisionRecall clip_pr = precision_recall(r.clip_level);
  const PrecisionRecall frame_pr = precision_recall(r.frame_level);
  ojson doc{
      {"confusion_counts", {{"clip", counts_json(r.clip_level)}, {"frame", counts_json(r.frame_level)}}},
      {"confusion_normalized", {{"clip", normalized_json(r.clip_level)}, {"frame", normalized_json(r.frame_level)}}},
      {"precision", {{"clip", optional_number(clip_pr.precision)}, {"frame", optional_number(frame_pr.precision)}}},
      {"recall", {{"clip", optional_number(clip_pr.recall)}, {"frame", optional_number(frame_pr.recall)}}},
      {"config",
       {{"subset", subset},
        {"clips", r.clips.size()},
        {"split", {split.train, split.val, split.test}},
        {"split_seed", split.seed},
        {"stratified", split.stratified},
        {"tau_clip", cfg.decision.tau_clip},
        {"kappa", cfg.gate.kappa},
        {"kp_conf_min", cfg.kinematics.kp_conf_min},
        {"impute_window", cfg.kinematics.impute_window},
        {"features", per_person_dim(cfg.kinematics.feature_set)},
        {"iou_min", cfg.tracker.iou_min},
        {"max_age", cfg.tracker.max_age}}},
  };
  return doc.dump() + "\n";
}

}  // namespace pushdet
