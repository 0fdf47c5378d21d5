#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fef/image.hpp"

namespace fef {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// The five named keypoints reported by the external detector. Any of them
// may be absent in the input file; consumers that need one check for it.
struct Keypoints {
  std::optional<Point> left_eye;
  std::optional<Point> right_eye;
  std::optional<Point> nose;
  std::optional<Point> mouth_left;
  std::optional<Point> mouth_right;
  std::optional<std::vector<Point>> points68;

  friend bool operator==(const Keypoints&, const Keypoints&) = default;
};

inline constexpr std::array<std::string_view, 5> kKeypointNames = {"left_eye", "right_eye", "nose", "mouth_left",
                                                                   "mouth_right"};

struct DetectionBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

struct FaceRecord {
  DetectionBox box;
  double confidence = 0.0;
  Keypoints points;

  friend bool operator==(const FaceRecord&, const FaceRecord&) = default;
};

struct LandmarkFrame {
  std::size_t frame_index = 0;
  std::vector<FaceRecord> faces;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

using FaceBox = Box;

struct FrameDims {
  int height = 0;
  int width = 0;
};

struct TrackEntry {
  std::size_t frame_index = 0;
  FaceBox refined_box;
  Keypoints landmarks;
  double confidence = 0.0;

  friend bool operator==(const TrackEntry&, const TrackEntry&) = default;
};

struct FaceTrack {
  std::vector<TrackEntry> entries;  // sorted by frame_index, unique
  std::vector<std::size_t> gaps;

  const TrackEntry* find(std::size_t frame_index) const;

  friend bool operator==(const FaceTrack&, const FaceTrack&) = default;
};

inline constexpr double kDefaultExpandFactor = 0.30;

std::vector<LandmarkFrame> parse_landmarks(std::string_view json_text);
std::vector<LandmarkFrame> ingest_landmarks(const std::filesystem::path& path);

// Smallest integer box enclosing a detector box.
FaceBox to_face_box(const DetectionBox& box);

// Largest box area wins; ties go to the smallest (x0, y0), then (x1, y1),
// then higher confidence, so the result does not depend on input order.
std::optional<FaceRecord> select_primary_face(const std::vector<FaceRecord>& faces);

// Grows width and height by `factor` in total (half on each side), rounds to
// the nearest pixel and clamps to the frame.
FaceBox expand_box(const FaceBox& box, double factor, FrameDims frame);

// When frame_count is given, frames absent from the landmark list are
// reported as gaps alongside frames listed with no faces.
FaceTrack build_face_track(const std::vector<LandmarkFrame>& frames, FrameDims frame,
                           double factor = kDefaultExpandFactor,
                           std::optional<std::size_t> frame_count = std::nullopt);

}  // namespace fef
