#pragma once

#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fef/face_track.hpp"
#include "fef/integrity.hpp"

namespace fef {

inline constexpr const char* kEvidenceSchemaVersion = "1.0";

// The facial evidence handed to the reasoning stages: tracked coordinates
// plus integrity metrics, with every real quantised to the canonical
// six-decimal grid.
struct FacialEvidence {
  std::string schema_version = kEvidenceSchemaVersion;
  FaceTrack coordinates;
  IntegrityMetrics integrity;

  bool empty() const { return coordinates.entries.empty() && integrity.per_frame.empty(); }

  friend bool operator==(const FacialEvidence&, const FacialEvidence&) = default;
};

struct SerializedEvidence {
  FacialEvidence evidence;
  std::string bytes;
};

FacialEvidence make_evidence(const FaceTrack& track, const IntegrityMetrics& metrics);

nlohmann::json to_json(const FacialEvidence& evidence);
nlohmann::json to_json(const IntegrityMetrics& metrics);
FacialEvidence evidence_from_json(const nlohmann::json& doc);

std::string serialize_evidence(const FacialEvidence& evidence);
SerializedEvidence serialize_evidence(const FaceTrack& track, const IntegrityMetrics& metrics);
FacialEvidence parse_evidence(std::string_view text);

// Every object key that occurs anywhere in the evidence document.
std::set<std::string> evidence_keys(const FacialEvidence& evidence);

}  // namespace fef
