#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fef/integrity.hpp"

namespace fef {

enum class Label { Real, Fake };

std::string_view to_string(Label label);

// Set several times above the largest consecutive-pair deltas seen on
// smoothly moving synthetic faces (96x96 frames, ~40x52 face box).
inline constexpr double kDefaultBlurThreshold = 500.0;
inline constexpr double kDefaultColorThreshold = 2.0;
inline constexpr double kDefaultTextureThreshold = 0.5;
inline constexpr double kDefaultBoundaryThreshold = 5.0;

struct MetricRule {
  double exceed_threshold = 0.0;
  double weight = 0.25;
};

// Per-delta exceedance rules for the LLM-free classifier. Order matches
// kDeltaMetricNames: blur, color, texture, boundary.
struct ThresholdProfile {
  std::array<MetricRule, 4> rules;

  static ThresholdProfile defaults();
  // Checks weights sum to 1 and thresholds are non-negative.
  void validate() const;
};

ThresholdProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ThresholdProfile& profile);
ThresholdProfile load_profile(const std::filesystem::path& path);

struct AnomalyBreakdown {
  double score = 0.0;
  std::array<double, 4> exceed_fraction{};
  std::size_t pairs = 0;
};

// Weighted share of consecutive pairs whose delta exceeds its threshold.
AnomalyBreakdown anomaly_breakdown(const IntegrityMetrics& metrics, const ThresholdProfile& profile);
double anomaly_score(const IntegrityMetrics& metrics, const ThresholdProfile& profile);

inline constexpr double kDefaultDecisionThreshold = 0.5;

// Fake iff score >= threshold.
Label classify(double score, double threshold = kDefaultDecisionThreshold);

}  // namespace fef
