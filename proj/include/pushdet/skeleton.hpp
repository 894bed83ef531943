#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pushdet {

/// COCO-17 keypoint order as emitted by YOLO-Pose style estimators.
enum class Joint : std::size_t {
  Nose = 0,
  LeftEye,
  RightEye,
  LeftEar,
  RightEar,
  LeftShoulder,
  RightShoulder,
  LeftElbow,
  RightElbow,
  LeftWrist,
  RightWrist,
  LeftHip,
  RightHip,
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
};

inline constexpr std::size_t kNumKeypoints = 17;
/// Limb and torso points used for features; 0..4 (head/face) are carried only.
inline constexpr std::size_t kFirstBodyKeypoint = 5;

constexpr std::size_t index(Joint j) noexcept { return static_cast<std::size_t>(j); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Image coordinates: origin top-left, y grows downward.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double conf = 0.0;

  Point2 point() const noexcept { return {x, y}; }
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct BBox {
  double x = 0.0;  // left
  double y = 0.0;  // top
  double w = 0.0;
  double h = 0.0;

  Point2 center() const noexcept { return {x + 0.5 * w, y + 0.5 * h}; }
  double area() const noexcept { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

using TrackId = std::uint32_t;

struct Skeleton {
  std::array<Keypoint, kNumKeypoints> keypoints{};
  BBox bbox{};
  double det_conf = 0.0;
  /// Present only on streams that already went through the tracker.
  std::optional<TrackId> tid;

  const Keypoint& operator[](Joint j) const noexcept { return keypoints[index(j)]; }
  Keypoint& operator[](Joint j) noexcept { return keypoints[index(j)]; }
  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct FrameDetections {
  std::int64_t frame_idx = 0;
  std::int64_t ts_ms = 0;
  std::vector<Skeleton> persons;
  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

enum class Label : std::uint8_t { Normal = 0, Push = 1 };

const char* to_string(Label label) noexcept;
Label label_from_string(std::string_view text);

struct Resolution {
  std::int32_t width = 0;
  std::int32_t height = 0;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct ClipRecord {
  std::string clip_id;
  /// Unlabeled on live streams (`"label": null`).
  std::optional<Label> label;
  Resolution resolution;
  std::vector<FrameDetections> frames;
  friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

/// Throws Error(Schema) on any violated invariant of the types above.
void validate(const Skeleton& skel);
void validate(const Resolution& res);

/// Wire-grid rounding: at most 6 decimals, -0 folded to 0. Every value that
/// survives a serialize/parse cycle is a fixed point of this function.
double quantize(double value) noexcept;
/// Shortest decimal text of quantize(value), e.g. "0.97", "12", "-3.5".
std::string format_number(double value);

/// One JSONL line (no trailing newline) in canonical field order.
struct FrameHeader {
  std::string clip_id;
  std::optional<Label> label;
  Resolution resolution;
};
std::string serialize_frame(const FrameHeader& header, const FrameDetections& frame);

/// A single parsed line. `line_no` is used for error locations only.
struct ParsedFrame {
  FrameHeader header;
  FrameDetections frame;
};
ParsedFrame parse_frame(std::string_view line, std::size_t line_no = 1);

/// Whole-clip reader. Enforces header consistency across lines, strictly
/// increasing frame_idx and non-decreasing ts_ms. Blank lines are ignored.
ClipRecord parse_clip(std::istream& in);
ClipRecord parse_clip(std::string_view text);

std::string serialize_clip(const ClipRecord& clip);

/// Every *.jsonl file under `dir`, sorted by filename.
std::vector<ClipRecord> load_clip_dir(const std::string& dir);
void write_clip_file(const std::string& path, const ClipRecord& clip);

}  // namespace pushdet
