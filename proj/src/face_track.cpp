#include "fef/face_track.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <json.hpp>

#include "fef/error.hpp"
#include "fef/fsutil.hpp"

using nlohmann::json;

namespace fef {

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::SchemaError, path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path, std::string("missing key \"") + key + "\"");
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) schema_fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_fail(path, "non-finite number");
  return d;
}

Point parse_point(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) schema_fail(path, "expected [x, y]");
  return {number_at(v[0], path + "[0]"), number_at(v[1], path + "[1]")};
}

FaceRecord parse_face(const json& face, const std::string& path) {
  if (!face.is_object()) schema_fail(path, "expected an object");
  FaceRecord rec;

  const json& box = require(face, "box", path);
  const std::string box_path = path + ".box";
  if (!box.is_array() || box.size() != 4) schema_fail(box_path, "expected [x0, y0, x1, y1]");
  rec.box = {number_at(box[0], box_path + "[0]"), number_at(box[1], box_path + "[1]"),
             number_at(box[2], box_path + "[2]"), number_at(box[3], box_path + "[3]")};
  if (!(rec.box.x0 < rec.box.x1) || !(rec.box.y0 < rec.box.y1)) {
    throw Error(ErrorKind::RangeError, box_path + ": requires x0 < x1 and y0 < y1");
  }

  rec.confidence = number_at(require(face, "confidence", path), path + ".confidence");
  if (rec.confidence < 0.0 || rec.confidence > 1.0) {
    throw Error(ErrorKind::RangeError, path + ".confidence: " + std::to_string(rec.confidence) +
                                           " outside [0, 1]");
  }

  const json& points = require(face, "points", path);
  const std::string pts_path = path + ".points";
  if (!points.is_object()) schema_fail(pts_path, "expected an object");
  auto read_named = [&](const char* name, std::optional<Point>& slot) {
    if (auto it = points.find(name); it != points.end()) slot = parse_point(*it, pts_path + "." + name);
  };
  read_named("left_eye", rec.points.left_eye);
  read_named("right_eye", rec.points.right_eye);
  read_named("nose", rec.points.nose);
  read_named("mouth_left", rec.points.mouth_left);
  read_named("mouth_right", rec.points.mouth_right);

  if (auto it = face.find("points68"); it != face.end() && !it->is_null()) {
    const std::string p68_path = path + ".points68";
    if (!it->is_array() || it->size() != 68) schema_fail(p68_path, "expected 68 [x, y] pairs");
    std::vector<Point> pts;
    pts.reserve(68);
    for (std::size_t i = 0; i < it->size(); ++i) {
      pts.push_back(parse_point((*it)[i], p68_path + "[" + std::to_string(i) + "]"));
    }
    rec.points.points68 = std::move(pts);
  }
  return rec;
}

Point clamp_point(Point p, FrameDims frame) {
  return {std::clamp(p.x, 0.0, static_cast<double>(frame.width)),
          std::clamp(p.y, 0.0, static_cast<double>(frame.height))};
}

Keypoints clamp_keypoints(Keypoints k, FrameDims frame) {
  for (auto* slot : {&k.left_eye, &k.right_eye, &k.nose, &k.mouth_left, &k.mouth_right}) {
    if (*slot) *slot = clamp_point(**slot, frame);
  }
  if (k.points68) {
    for (auto& p : *k.points68) p = clamp_point(p, frame);
  }
  return k;
}

}  // namespace

const TrackEntry* FaceTrack::find(std::size_t frame_index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), frame_index,
                             [](const TrackEntry& e, std::size_t idx) { return e.frame_index < idx; });
  return (it != entries.end() && it->frame_index == frame_index) ? &*it : nullptr;
}

std::vector<LandmarkFrame> parse_landmarks(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    schema_fail("$", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_fail("$", "expected an object");
  const json& frames = require(doc, "frames", "$");
  if (!frames.is_array()) schema_fail("$.frames", "expected an array");

  std::vector<LandmarkFrame> out;
  out.reserve(frames.size());
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string path = "$.frames[" + std::to_string(i) + "]";
    const json& f = frames[i];
    if (!f.is_object()) schema_fail(path, "expected an object");
    const json& idx = require(f, "frame_index", path);
    if (!idx.is_number_integer() || idx.get<long long>() < 0) {
      schema_fail(path + ".frame_index", "expected a non-negative integer");
    }
    LandmarkFrame lf;
    lf.frame_index = idx.get<std::size_t>();
    if (!seen.insert(lf.frame_index).second) schema_fail(path + ".frame_index", "duplicate frame index");
    const json& faces = require(f, "faces", path);
    if (!faces.is_array()) schema_fail(path + ".faces", "expected an array");
    for (std::size_t j = 0; j < faces.size(); ++j) {
      lf.faces.push_back(parse_face(faces[j], path + ".faces[" + std::to_string(j) + "]"));
    }
    out.push_back(std::move(lf));
  }
  std::sort(out.begin(), out.end(),
            [](const LandmarkFrame& a, const LandmarkFrame& b) { return a.frame_index < b.frame_index; });
  return out;
}

std::vector<LandmarkFrame> ingest_landmarks(const std::filesystem::path& path) {
  return parse_landmarks(read_text_file(path));
}

FaceBox to_face_box(const DetectionBox& box) {
  return {static_cast<int>(std::floor(box.x0)), static_cast<int>(std::floor(box.y0)),
          static_cast<int>(std::ceil(box.x1)), static_cast<int>(std::ceil(box.y1))};
}

std::optional<FaceRecord> select_primary_face(const std::vector<FaceRecord>& faces) {
  if (faces.empty()) return std::nullopt;
  auto better = [](const FaceRecord& a, const FaceRecord& b) {
    const FaceBox ba = to_face_box(a.box);
    const FaceBox bb = to_face_box(b.box);
    if (ba.area() != bb.area()) return ba.area() > bb.area();
    return std::tuple(ba.x0, ba.y0, ba.x1, ba.y1, -a.confidence) <
           std::tuple(bb.x0, bb.y0, bb.x1, bb.y1, -b.confidence);
  };
  return *std::min_element(faces.begin(), faces.end(), better);
}

FaceBox expand_box(const FaceBox& box, double factor, FrameDims frame) {
  if (box.empty()) throw Error(ErrorKind::DegenerateBox, "box has zero area");
  if (!(factor >= 0.0)) throw Error(ErrorKind::RangeError, "expansion factor must be non-negative");
  const double pad_x = factor * box.width() / 2.0;
  const double pad_y = factor * box.height() / 2.0;
  FaceBox out{static_cast<int>(std::lround(box.x0 - pad_x)), static_cast<int>(std::lround(box.y0 - pad_y)),
              static_cast<int>(std::lround(box.x1 + pad_x)), static_cast<int>(std::lround(box.y1 + pad_y))};
  out.x0 = std::clamp(out.x0, 0, frame.width);
  out.x1 = std::clamp(out.x1, 0, frame.width);
  out.y0 = std::clamp(out.y0, 0, frame.height);
  out.y1 = std::clamp(out.y1, 0, frame.height);
  if (out.empty()) throw Error(ErrorKind::DegenerateBox, "box lies outside the frame");
  return out;
}

FaceTrack build_face_track(const std::vector<LandmarkFrame>& frames, FrameDims frame, double factor,
                           std::optional<std::size_t> frame_count) {
  FaceTrack track;
  std::set<std::size_t> gaps;
  for (const auto& lf : frames) {
    if (frame_count && lf.frame_index >= *frame_count) continue;
    auto face = select_primary_face(lf.faces);
    if (!face) {
      gaps.insert(lf.frame_index);
      continue;
    }
    TrackEntry entry;
    entry.frame_index = lf.frame_index;
    entry.refined_box = expand_box(to_face_box(face->box), factor, frame);
    entry.landmarks = clamp_keypoints(face->points, frame);
    entry.confidence = face->confidence;
    track.entries.push_back(std::move(entry));
  }
  std::sort(track.entries.begin(), track.entries.end(),
            [](const TrackEntry& a, const TrackEntry& b) { return a.frame_index < b.frame_index; });
  for (std::size_t i = 1; i < track.entries.size(); ++i) {
    if (track.entries[i].frame_index == track.entries[i - 1].frame_index) {
      throw Error(ErrorKind::PreconditionError,
                  "frame " + std::to_string(track.entries[i].frame_index) + " listed twice");
    }
  }
  if (frame_count) {
    for (std::size_t i = 0; i < *frame_count; ++i) {
      if (!track.find(i)) gaps.insert(i);
    }
  }
  track.gaps.assign(gaps.begin(), gaps.end());
  return track;
}

}  // namespace fef
