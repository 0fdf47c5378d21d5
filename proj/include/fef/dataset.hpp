#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fef/face_track.hpp"
#include "fef/frame_ingest.hpp"
#include "fef/heuristic.hpp"
#include "fef/image.hpp"

namespace fef {

enum class ForgeryType { DeepFake, Face2Face, FaceSwap, FaceShifter, NeuralTexture, Real };

inline constexpr std::array<ForgeryType, 6> kAllForgeryTypes = {
    ForgeryType::DeepFake,    ForgeryType::Face2Face,     ForgeryType::FaceSwap,
    ForgeryType::FaceShifter, ForgeryType::NeuralTexture, ForgeryType::Real};

std::string_view to_string(ForgeryType type);
// Throws TemplateError for names outside the enumeration.
ForgeryType parse_forgery_type(std::string_view name);

inline constexpr double kDefaultDiffThreshold = 25.0;
inline constexpr double kDefaultRegionPadding = 0.10;

struct RegionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1
  double threshold_used = kDefaultDiffThreshold;

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] != 0;
  }
  std::size_t count() const;
};

enum class FaceRegion { Eyes, Face, Mouth, Nose };
inline constexpr std::array<FaceRegion, 4> kAllRegions = {FaceRegion::Eyes, FaceRegion::Face, FaceRegion::Mouth,
                                                          FaceRegion::Nose};
std::string_view to_string(FaceRegion region);

using RegionBoxes = std::map<FaceRegion, Box>;
using RegionScore = std::map<FaceRegion, double>;

// Pixels whose largest per-channel absolute difference exceeds tau.
RegionMask diff_mask(const RgbImage& real_frame, const RgbImage& fake_frame, double tau = kDefaultDiffThreshold);

// Eyes, nose and mouth boxes enclose their keypoints padded by a fraction
// of the face size; the face region is the refined face box.
RegionBoxes partition_regions(const Keypoints& landmarks, const Box& face_box, FrameDims dims,
                              double padding = kDefaultRegionPadding);

RegionScore region_forgery_degree(const RegionMask& mask, const RegionBoxes& regions);

struct FrameRegionSummary {
  std::size_t frame_index = 0;
  double mask_fraction = 0.0;
  RegionScore scores;
};

struct StructuredLabel {
  ForgeryType forgery_type = ForgeryType::Real;
  RegionScore region_scores;
  std::vector<FrameRegionSummary> per_frame;
};

// Averages per-frame region degrees over every tracked frame. Real videos
// get all-zero scores without any comparison.
StructuredLabel build_structured_label(ForgeryType type, const FrameSequence& video,
                                       const FrameSequence* source, const FaceTrack& track,
                                       double tau = kDefaultDiffThreshold, double padding = kDefaultRegionPadding);

std::string format_region_scores(const RegionScore& scores);

struct PromptTemplates {
  std::map<ForgeryType, std::string> by_type;

  static PromptTemplates defaults();
  // Reads <dir>/<ForgeryType>.txt for every type; missing files are left
  // absent and surface as TemplateError when used.
  static PromptTemplates load(const std::filesystem::path& dir);
};

// Deterministic stand-in for assistant-model annotation.
std::string templated_rationale(const StructuredLabel& label);

struct ReasoningQuadruple {
  std::string question;
  std::string video_ref;
  std::string rationale;
  Label answer = Label::Real;
  ForgeryType forgery_type = ForgeryType::Real;
  RegionScore region_scores;

  friend bool operator==(const ReasoningQuadruple&, const ReasoningQuadruple&) = default;
};

ReasoningQuadruple assemble_quadruple(const std::string& video_ref, const StructuredLabel& label,
                                      const PromptTemplates& templates, const std::string& rationale_text);

std::string to_jsonl_row(const ReasoningQuadruple& row);
ReasoningQuadruple quadruple_from_jsonl(std::string_view line);
std::vector<ReasoningQuadruple> parse_corpus(std::string_view jsonl);

struct CorpusStats {
  std::size_t fake_count = 0;
  std::size_t real_count = 0;
  double fake_fraction = 0.0;
  double real_fraction = 0.0;
  std::map<ForgeryType, std::size_t> per_type;
};

CorpusStats corpus_stats(const std::vector<ReasoningQuadruple>& rows);
nlohmann::json to_json(const CorpusStats& stats);

}  // namespace fef
