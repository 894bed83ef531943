#include "pushdet/stream.hpp"

#include <condition_variable>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>
#include <variant>

#include "pushdet/error.hpp"

namespace pushdet {

void RunConfig::validate() const {
  pipeline.tracker.validate();
  pipeline.kinematics.validate();
  pipeline.gate.validate();
  pipeline.decision.validate();
  if (window_frames < 1) throw Error(Errc::Config, "window_frames must be >= 1");
}

std::string serialize_event(const FrameEvent& e) {
  std::string out = "{\"frame\": " + std::to_string(e.frame) + ", \"pairs\": [";
  for (std::size_t i = 0; i < e.pairs.size(); ++i) {
    const PairEvent& p = e.pairs[i];
    if (i) out += ", ";
    out += "{\"a\": " + std::to_string(p.a) + ", \"b\": " + std::to_string(p.b) + ", \"pred\": \"" +
           to_string(p.pred) + "\", \"proba\": " + format_number(p.proba) + "}";
  }
  out += "], \"alert\": ";
  out += e.alert ? "true" : "false";
  out += "}";
  return out;
}

StreamRunner::StreamRunner(const ForestModel& model, RunConfig cfg)
    : model_(model),
      cfg_(cfg),
      tracker_(cfg.pipeline.tracker),
      featurizer_(cfg.pipeline.kinematics, cfg.pipeline.gate) {
  cfg_.validate();
  const std::size_t expected = 2 * per_person_dim(cfg_.pipeline.kinematics.feature_set);
  if (model.feature_dim != expected)
    throw Error(Errc::Config, "model expects " + std::to_string(model.feature_dim) +
                                  " features but the configured feature set yields " + std::to_string(expected));
}

FrameEvent StreamRunner::process(const FrameDetections& frame) {
  const TrackedFrame tracked = tracker_.step(frame);

  FrameEvent event{frame.frame_idx, {}, false};
  bool any_push = false;
  for (const auto& pair : featurizer_.process(tracked)) {
    const std::size_t votes = model_.push_votes(pair.features);
    const Label pred = 2 * votes > model_.trees.size() ? Label::Push : Label::Normal;
    any_push = any_push || pred == Label::Push;
    event.pairs.push_back({pair.tid_a, pair.tid_b, pred,
                           static_cast<double>(votes) / static_cast<double>(model_.trees.size())});
  }

  std::vector<TrackId> live;
  live.reserve(tracker_.tracks().size());
  for (const Track& t : tracker_.tracks()) live.push_back(t.track_id);
  featurizer_.retain(live);

  const WindowEntry entry{!event.pairs.empty(), any_push};
  window_.push_back(entry);
  gated_in_window_ += entry.gated;
  push_in_window_ += entry.push;
  if (window_.size() > cfg_.window_frames) {
    gated_in_window_ -= window_.front().gated;
    push_in_window_ -= window_.front().push;
    window_.pop_front();
  }

  if (cfg_.alert_mode == AlertMode::PerFrame) {
    event.alert = any_push;
  } else {
    event.alert = gated_in_window_ > 0 &&
                  static_cast<double>(push_in_window_) / static_cast<double>(gated_in_window_) >=
                      cfg_.pipeline.decision.tau_clip;
  }
  return event;
}

namespace {

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
  }

  /// nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
};

struct ParsedLine {
  std::size_t line_no;
  std::variant<FrameDetections, std::string> body;  // frame or error text
};

std::optional<ParsedLine> parse_line(const std::string& line, std::size_t line_no) {
  if (line.find_first_not_of(" \t\r") == std::string::npos) return std::nullopt;
  try {
    return ParsedLine{line_no, parse_frame(line, line_no).frame};
  } catch (const Error& e) {
    return ParsedLine{line_no, std::string(e.what())};
  }
}

// Returns the output line for an accepted frame, or logs and returns nullopt.
std::optional<std::string> handle(StreamRunner& runner, ParsedLine& parsed, RunSummary& summary, std::ostream& log) {
  if (auto* err = std::get_if<std::string>(&parsed.body)) {
    ++summary.input_errors;
    log << "skipped: " << *err << '\n';
    return std::nullopt;
  }
  try {
    return serialize_event(runner.process(std::get<FrameDetections>(parsed.body)));
  } catch (const Error& e) {
    ++summary.input_errors;
    log << "skipped line " << parsed.line_no << ": " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace

RunSummary run_stream(std::istream& in, std::ostream& out, std::ostream& log, const ForestModel& model,
                      const RunConfig& cfg) {
  StreamRunner runner(model, cfg);
  RunSummary summary;

  if (cfg.threads <= 1) {
    std::string line;
    while (std::getline(in, line)) {
      ++summary.lines;
      auto parsed = parse_line(line, summary.lines);
      if (!parsed) continue;
      if (auto text = handle(runner, *parsed, summary, log)) {
        out << *text << '\n';
        ++summary.events;
      }
    }
    out.flush();
    return summary;
  }

  // reader -> (this thread: track, featurize, classify) -> writer, in order.
  constexpr std::size_t kDepth = 256;
  BoundedQueue<ParsedLine> parsed_q(kDepth);
  BoundedQueue<std::string> out_q(kDepth);
  std::size_t lines_read = 0;
  std::jthread reader([&] {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto parsed = parse_line(line, line_no)) parsed_q.push(std::move(*parsed));
    }
    lines_read = line_no;
    parsed_q.close();
  });
  std::jthread writer([&] {
    while (auto text = out_q.pop()) out << *text << '\n';
    out.flush();
  });
  while (auto parsed = parsed_q.pop()) {
    if (auto text = handle(runner, *parsed, summary, log)) {
      out_q.push(std::move(*text));
      ++summary.events;
    }
  }
  out_q.close();
  reader.join();
  writer.join();
  summary.lines = lines_read;
  return summary;
}

}  // namespace pushdet
