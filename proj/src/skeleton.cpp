#include "pushdet/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pushdet/error.hpp"

namespace pushdet {

using nlohmann::json;

const char* to_string(Label label) noexcept { return label == Label::Push ? "push" : "normal"; }

Label label_from_string(std::string_view text) {
  if (text == "push") return Label::Push;
  if (text == "normal") return Label::Normal;
  throw Error(Errc::Schema, "unknown label '" + std::string(text) + "'", std::nullopt, "label");
}

namespace {

bool in_unit(double v) noexcept { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

void validate(const Skeleton& skel) {
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const Keypoint& kp = skel.keypoints[i];
    if (!std::isfinite(kp.x) || !std::isfinite(kp.y))
      throw Error(Errc::Schema, "keypoint " + std::to_string(i) + " has non-finite coordinates",
                  std::nullopt, "kpts");
    if (!in_unit(kp.conf))
      throw Error(Errc::Schema, "keypoint " + std::to_string(i) + " confidence outside [0,1]",
                  std::nullopt, "kpts");
  }
  const BBox& b = skel.bbox;
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !(b.w > 0.0) || !(b.h > 0.0) ||
      !std::isfinite(b.w) || !std::isfinite(b.h))
    throw Error(Errc::Schema, "bbox needs finite origin and positive size", std::nullopt, "bbox");
  if (!in_unit(skel.det_conf))
    throw Error(Errc::Schema, "detection confidence outside [0,1]", std::nullopt, "conf");
  if (skel.tid && *skel.tid == 0)
    throw Error(Errc::Schema, "track ids are positive", std::nullopt, "tid");
}

void validate(const Resolution& res) {
  if (res.width <= 0 || res.height <= 0)
    throw Error(Errc::Schema, "resolution must be positive", std::nullopt, "res");
}

namespace {

// "%.6f" text with trailing zeros (and a bare '.') removed.
std::string six_decimals(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

}  // namespace

double quantize(double value) noexcept {
  if (!std::isfinite(value)) return value;
  return std::strtod(six_decimals(value).c_str(), nullptr);
}

std::string format_number(double value) { return six_decimals(value); }

std::string serialize_frame(const FrameHeader& header, const FrameDetections& frame) {
  std::string out;
  out.reserve(96 + frame.persons.size() * 420);
  out += "{\"clip_id\": ";
  out += json(header.clip_id).dump();
  out += ", \"label\": ";
  out += header.label ? std::string("\"") + to_string(*header.label) + "\"" : std::string("null");
  out += ", \"res\": [" + std::to_string(header.resolution.width) + ", " +
         std::to_string(header.resolution.height) + "]";
  out += ", \"frame\": " + std::to_string(frame.frame_idx);
  out += ", \"ts_ms\": " + std::to_string(frame.ts_ms);
  out += ", \"persons\": [";
  for (std::size_t p = 0; p < frame.persons.size(); ++p) {
    const Skeleton& s = frame.persons[p];
    if (p) out += ", ";
    out += "{\"bbox\": [" + format_number(s.bbox.x) + ", " + format_number(s.bbox.y) + ", " +
           format_number(s.bbox.w) + ", " + format_number(s.bbox.h) + "]";
    out += ", \"conf\": " + format_number(s.det_conf);
    out += ", \"kpts\": [";
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
      const Keypoint& k = s.keypoints[i];
      if (i) out += ", ";
      out += "[" + format_number(k.x) + ", " + format_number(k.y) + ", " + format_number(k.conf) + "]";
    }
    out += "]";
    if (s.tid) out += ", \"tid\": " + std::to_string(*s.tid);
    out += "}";
  }
  out += "]}";
  return out;
}

namespace {

const json& require(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::Schema, "missing field", line_no, key);
  return *it;
}

double number(const json& v, std::size_t line_no, const char* field) {
  if (!v.is_number()) throw Error(Errc::Schema, "expected a number", line_no, field);
  return v.get<double>();
}

std::int64_t integer(const json& v, std::size_t line_no, const char* field) {
  if (!v.is_number_integer()) throw Error(Errc::Schema, "expected an integer", line_no, field);
  return v.get<std::int64_t>();
}

Skeleton parse_person(const json& p, std::size_t line_no) {
  if (!p.is_object()) throw Error(Errc::Schema, "person must be an object", line_no, "persons");
  Skeleton s;
  const json& bbox = require(p, "bbox", line_no);
  if (!bbox.is_array() || bbox.size() != 4)
    throw Error(Errc::Schema, "bbox must be [x, y, w, h]", line_no, "bbox");
  s.bbox = {number(bbox[0], line_no, "bbox"), number(bbox[1], line_no, "bbox"),
            number(bbox[2], line_no, "bbox"), number(bbox[3], line_no, "bbox")};
  s.det_conf = number(require(p, "conf", line_no), line_no, "conf");
  const json& kpts = require(p, "kpts", line_no);
  if (!kpts.is_array() || kpts.size() != kNumKeypoints)
    throw Error(Errc::Schema,
                "expected " + std::to_string(kNumKeypoints) + " keypoints, got " +
                    std::to_string(kpts.is_array() ? kpts.size() : 0),
                line_no, "kpts");
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const json& k = kpts[i];
    if (!k.is_array() || k.size() != 3)
      throw Error(Errc::Schema, "keypoint must be [x, y, conf]", line_no, "kpts");
    s.keypoints[i] = {number(k[0], line_no, "kpts"), number(k[1], line_no, "kpts"),
                      number(k[2], line_no, "kpts")};
  }
  if (auto it = p.find("tid"); it != p.end() && !it->is_null()) {
    const std::int64_t tid = integer(*it, line_no, "tid");
    if (tid <= 0 || tid > 0xFFFFFFFFLL)
      throw Error(Errc::Schema, "track id out of range", line_no, "tid");
    s.tid = static_cast<TrackId>(tid);
  }
  try {
    validate(s);
  } catch (const Error& e) {
    throw Error(e.code(), e.message(), line_no, e.field());
  }
  return s;
}

}  // namespace

ParsedFrame parse_frame(std::string_view line, std::size_t line_no) {
  json doc = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(Errc::Parse, "malformed JSON record", line_no);
  if (!doc.is_object()) throw Error(Errc::Parse, "record must be a JSON object", line_no);

  ParsedFrame out;
  const json& id = require(doc, "clip_id", line_no);
  if (!id.is_string()) throw Error(Errc::Schema, "expected a string", line_no, "clip_id");
  out.header.clip_id = id.get<std::string>();

  const json& label = require(doc, "label", line_no);
  if (label.is_string()) {
    try {
      out.header.label = label_from_string(label.get<std::string>());
    } catch (const Error&) {
      throw Error(Errc::Schema, "label must be \"push\", \"normal\" or null", line_no, "label");
    }
  } else if (!label.is_null()) {
    throw Error(Errc::Schema, "label must be \"push\", \"normal\" or null", line_no, "label");
  }

  const json& res = require(doc, "res", line_no);
  if (!res.is_array() || res.size() != 2)
    throw Error(Errc::Schema, "res must be [W, H]", line_no, "res");
  const std::int64_t w = integer(res[0], line_no, "res");
  const std::int64_t h = integer(res[1], line_no, "res");
  if (w <= 0 || h <= 0 || w > INT32_MAX || h > INT32_MAX)
    throw Error(Errc::Schema, "resolution must be positive", line_no, "res");
  out.header.resolution = {static_cast<std::int32_t>(w), static_cast<std::int32_t>(h)};

  out.frame.frame_idx = integer(require(doc, "frame", line_no), line_no, "frame");
  if (out.frame.frame_idx < 0) throw Error(Errc::Schema, "frame index must be >= 0", line_no, "frame");
  out.frame.ts_ms = integer(require(doc, "ts_ms", line_no), line_no, "ts_ms");

  const json& persons = require(doc, "persons", line_no);
  if (!persons.is_array()) throw Error(Errc::Schema, "persons must be an array", line_no, "persons");
  out.frame.persons.reserve(persons.size());
  for (const json& p : persons) out.frame.persons.push_back(parse_person(p, line_no));
  return out;
}

ClipRecord parse_clip(std::istream& in) {
  ClipRecord clip;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ParsedFrame parsed = parse_frame(line, line_no);
    if (first) {
      clip.clip_id = parsed.header.clip_id;
      clip.label = parsed.header.label;
      clip.resolution = parsed.header.resolution;
      first = false;
    } else {
      if (parsed.header.clip_id != clip.clip_id)
        throw Error(Errc::Schema, "clip_id changes within a clip", line_no, "clip_id");
      if (parsed.header.label != clip.label)
        throw Error(Errc::Schema, "label changes within a clip", line_no, "label");
      if (!(parsed.header.resolution == clip.resolution))
        throw Error(Errc::Schema, "resolution changes within a clip", line_no, "res");
      const FrameDetections& prev = clip.frames.back();
      if (parsed.frame.frame_idx <= prev.frame_idx)
        throw Error(Errc::Sequencing, "frame index must strictly increase", line_no, "frame");
      if (parsed.frame.ts_ms < prev.ts_ms)
        throw Error(Errc::Sequencing, "timestamp went backwards", line_no, "ts_ms");
    }
    clip.frames.push_back(std::move(parsed.frame));
  }
  if (clip.frames.empty()) throw Error(Errc::Schema, "clip has no frames", line_no);
  return clip;
}

ClipRecord parse_clip(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_clip(in);
}

std::string serialize_clip(const ClipRecord& clip) {
  const FrameHeader header{clip.clip_id, clip.label, clip.resolution};
  std::string out;
  for (const FrameDetections& f : clip.frames) {
    out += serialize_frame(header, f);
    out += '\n';
  }
  return out;
}

std::vector<ClipRecord> load_clip_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(Errc::Config, "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<ClipRecord> clips;
  clips.reserve(files.size());
  for (const fs::path& f : files) {
    std::ifstream in(f);
    try {
      clips.push_back(parse_clip(in));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.message(), e.line(), e.field());
    }
  }
  return clips;
}

void write_clip_file(const std::string& path, const ClipRecord& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Config, "cannot write " + path);
  out << serialize_clip(clip);
}

}  // namespace pushdet
