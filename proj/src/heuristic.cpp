#include "fef/heuristic.hpp"

#include <algorithm>
#include <cmath>

#include "fef/error.hpp"
#include "fef/fsutil.hpp"

using nlohmann::json;

namespace fef {

std::string_view to_string(Label label) { return label == Label::Fake ? "fake" : "real"; }

ThresholdProfile ThresholdProfile::defaults() {
  // Thresholds sit between the per-pair deltas of temporally smooth footage
  // and those of frames with spliced-in blur, colour and edge changes.
  ThresholdProfile p;
  p.rules = {MetricRule{kDefaultBlurThreshold, 0.25}, MetricRule{kDefaultColorThreshold, 0.25},
             MetricRule{kDefaultTextureThreshold, 0.25}, MetricRule{kDefaultBoundaryThreshold, 0.25}};
  return p;
}

void ThresholdProfile::validate() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (!(r.exceed_threshold >= 0.0) || !std::isfinite(r.exceed_threshold)) {
      throw Error(ErrorKind::ConfigError, std::string(kDeltaMetricNames[i]) + ": threshold must be >= 0");
    }
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) {
      throw Error(ErrorKind::ConfigError, std::string(kDeltaMetricNames[i]) + ": weight must be >= 0");
    }
    sum += r.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::ConfigError, "profile weights must sum to 1");
}

ThresholdProfile profile_from_json(const json& doc) {
  ThresholdProfile p = ThresholdProfile::defaults();
  try {
    for (std::size_t i = 0; i < p.rules.size(); ++i) {
      const json& rule = doc.at(kDeltaMetricNames[i]);
      p.rules[i].exceed_threshold = rule.at("exceed_threshold").get<double>();
      p.rules[i].weight = rule.at("weight").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed threshold profile: ") + e.what());
  }
  p.validate();
  return p;
}

json to_json(const ThresholdProfile& profile) {
  json doc = json::object();
  for (std::size_t i = 0; i < profile.rules.size(); ++i) {
    doc[kDeltaMetricNames[i]] = {{"exceed_threshold", profile.rules[i].exceed_threshold},
                                 {"weight", profile.rules[i].weight}};
  }
  return doc;
}

ThresholdProfile load_profile(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  }
  return profile_from_json(doc);
}

AnomalyBreakdown anomaly_breakdown(const IntegrityMetrics& metrics, const ThresholdProfile& profile) {
  profile.validate();
  if (metrics.per_pair.empty()) throw Error(ErrorKind::NoPairs, "no consecutive face pairs to score");
  static constexpr double PairDeltas::*kFields[] = {&PairDeltas::delta_blur, &PairDeltas::delta_color,
                                                     &PairDeltas::delta_texture, &PairDeltas::delta_boundary};
  AnomalyBreakdown out;
  out.pairs = metrics.per_pair.size();
  for (std::size_t i = 0; i < profile.rules.size(); ++i) {
    std::size_t exceed = 0;
    for (const auto& p : metrics.per_pair) {
      if (p.*kFields[i] > profile.rules[i].exceed_threshold) ++exceed;
    }
    out.exceed_fraction[i] = static_cast<double>(exceed) / static_cast<double>(out.pairs);
    out.score += profile.rules[i].weight * out.exceed_fraction[i];
  }
  out.score = std::clamp(out.score, 0.0, 1.0);
  return out;
}

double anomaly_score(const IntegrityMetrics& metrics, const ThresholdProfile& profile) {
  return anomaly_breakdown(metrics, profile).score;
}

Label classify(double score, double threshold) { return score >= threshold ? Label::Fake : Label::Real; }

}  // namespace fef
