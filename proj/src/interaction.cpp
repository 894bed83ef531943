#include "pushdet/interaction.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pushdet/error.hpp"

namespace pushdet {

void GateConfig::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(Errc::Config, "kappa must be > 0");
}

std::vector<std::pair<TrackId, TrackId>> gate_pairs(const std::vector<TrackedPerson>& frame, const GateConfig& cfg) {
  std::vector<std::pair<TrackId, TrackId>> out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (std::size_t j = i + 1; j < frame.size(); ++j) {
      const Skeleton& si = frame[i].skeleton;
      const Skeleton& sj = frame[j].skeleton;
      if (frame[i].track_id == frame[j].track_id) continue;
      const Point2 ci = si.bbox.center(), cj = sj.bbox.center();
      const double dist = std::hypot(ci.x - cj.x, ci.y - cj.y);
      if (!(dist < cfg.kappa * std::max(si.bbox.h, sj.bbox.h))) continue;
      TrackId a = frame[i].track_id, b = frame[j].track_id;
      const bool swap = ci.x > cj.x || (ci.x == cj.x && a > b);
      if (swap) std::swap(a, b);
      out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> pair_feature_names(FeatureSet fs) {
  std::vector<std::string> names;
  for (const char* side : {"a_", "b_"})
    for (std::size_t i = 0; i < per_person_dim(fs); ++i) names.push_back(side + std::string(kFeatureNames[i]));
  return names;
}

PairFeaturizer::PairFeaturizer(KinematicsConfig kcfg, GateConfig gcfg) : kcfg_(kcfg), gcfg_(gcfg) {
  kcfg_.validate();
  gcfg_.validate();
}

ImputationState& PairFeaturizer::state_for(TrackId id) {
  auto it = std::lower_bound(states_.begin(), states_.end(), id,
                             [](const auto& entry, TrackId key) { return entry.first < key; });
  if (it == states_.end() || it->first != id) it = states_.insert(it, {id, ImputationState{}});
  return it->second;
}

void PairFeaturizer::retain(const std::vector<TrackId>& live) {
  std::erase_if(states_, [&](const auto& entry) { return !std::binary_search(live.begin(), live.end(), entry.first); });
}

std::vector<PairFeaturizer::FramePair> PairFeaturizer::process(const TrackedFrame& frame) {
  // Every visible person updates its imputation memory, gated or not.
  std::vector<std::pair<TrackId, FeatureVector>> features;
  features.reserve(frame.persons.size());
  for (const TrackedPerson& p : frame.persons)
    features.emplace_back(p.track_id, extract_features(p.skeleton, frame.frame_idx, state_for(p.track_id), kcfg_));

  auto lookup = [&](TrackId id) -> const FeatureVector& {
    return std::find_if(features.begin(), features.end(), [&](const auto& f) { return f.first == id; })->second;
  };

  const std::size_t dim = per_person_dim(kcfg_.feature_set);
  std::vector<FramePair> out;
  for (const auto& [a, b] : gate_pairs(frame.persons, gcfg_)) {
    const FeatureVector& fa = lookup(a);
    const FeatureVector& fb = lookup(b);
    if (!fa.usable(kcfg_.feature_set) || !fb.usable(kcfg_.feature_set)) continue;
    FramePair pair{a, b, {}};
    pair.features.reserve(2 * dim);
    pair.features.insert(pair.features.end(), fa.values.begin(), fa.values.begin() + static_cast<std::ptrdiff_t>(dim));
    pair.features.insert(pair.features.end(), fb.values.begin(), fb.values.begin() + static_cast<std::ptrdiff_t>(dim));
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<PairSample> build_pair_samples(const TrackedClip& clip, const KinematicsConfig& kcfg,
                                           const GateConfig& gcfg) {
  PairFeaturizer featurizer(kcfg, gcfg);
  std::vector<PairSample> out;
  for (const TrackedFrame& frame : clip.frames) {
    for (auto& pair : featurizer.process(frame))
      out.push_back({clip.clip_id, frame.frame_idx, pair.tid_a, pair.tid_b, std::move(pair.features), clip.label});
  }
  return out;
}

void write_pairs_csv(std::ostream& out, const std::vector<PairSample>& samples, std::size_t dim) {
  out << "clip_id,frame,tid_a,tid_b";
  for (std::size_t i = 1; i <= dim; ++i) out << ",f" << i;
  out << ",label\n";
  for (const PairSample& s : samples) {
    if (s.features.size() != dim) throw Error(Errc::Validation, "pair sample dimension mismatch");
    out << s.clip_id << ',' << s.frame_idx << ',' << s.tid_a << ',' << s.tid_b;
    for (double v : s.features) out << ',' << format_number(v);
    out << ',' << (s.label ? to_string(*s.label) : "") << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_int(const std::string& text, std::size_t line_no, const char* field) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(Errc::Parse, "bad integer '" + text + "'", line_no, field);
  return value;
}

}  // namespace

std::vector<PairSample> read_pairs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Parse, "empty pairs file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 6 || header[0] != "clip_id" || header[1] != "frame" || header[2] != "tid_a" ||
      header[3] != "tid_b" || header.back() != "label")
    throw Error(Errc::Schema, "pairs header must be clip_id,frame,tid_a,tid_b,f1..fN,label", 1);
  const std::size_t dim = header.size() - 5;
  for (std::size_t i = 0; i < dim; ++i)
    if (header[4 + i] != "f" + std::to_string(i + 1)) throw Error(Errc::Schema, "feature columns must be f1..fN", 1);

  std::vector<PairSample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(Errc::Schema, "expected " + std::to_string(header.size()) + " columns", line_no);
    PairSample s;
    s.clip_id = cells[0];
    s.frame_idx = parse_int<std::int64_t>(cells[1], line_no, "frame");
    s.tid_a = parse_int<TrackId>(cells[2], line_no, "tid_a");
    s.tid_b = parse_int<TrackId>(cells[3], line_no, "tid_b");
    s.features.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const std::string& c = cells[4 + i];
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size() || !std::isfinite(v))
        throw Error(Errc::Parse, "bad feature value '" + c + "'", line_no, header[4 + i]);
      s.features.push_back(v);
    }
    if (!cells.back().empty()) {
      try {
        s.label = label_from_string(cells.back());
      } catch (const Error& e) {
        throw Error(Errc::Schema, e.message(), line_no, "label");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pushdet
