#include "fef/evidence.hpp"

#include "fef/canonical_json.hpp"
#include "fef/error.hpp"

using nlohmann::json;

namespace fef {

namespace {

Point quantize(Point p) { return {fef::quantize(p.x), fef::quantize(p.y)}; }

Keypoints quantize(Keypoints k) {
  for (auto* slot : {&k.left_eye, &k.right_eye, &k.nose, &k.mouth_left, &k.mouth_right}) {
    if (*slot) *slot = quantize(**slot);
  }
  if (k.points68) {
    for (auto& p : *k.points68) p = quantize(p);
  }
  return k;
}

json point_json(Point p) { return json::array({p.x, p.y}); }

Point point_from(const json& v) { return {v.at(0).get<double>(), v.at(1).get<double>()}; }

json keypoints_json(const Keypoints& k) {
  json out = json::object();
  const std::pair<const char*, const std::optional<Point>*> named[] = {
      {"left_eye", &k.left_eye}, {"right_eye", &k.right_eye}, {"nose", &k.nose},
      {"mouth_left", &k.mouth_left}, {"mouth_right", &k.mouth_right}};
  for (const auto& [name, slot] : named) {
    if (*slot) out[name] = point_json(**slot);
  }
  if (k.points68) {
    json arr = json::array();
    for (const auto& p : *k.points68) arr.push_back(point_json(p));
    out["points68"] = std::move(arr);
  }
  return out;
}

Keypoints keypoints_from(const json& v) {
  Keypoints k;
  const std::pair<const char*, std::optional<Point>*> named[] = {
      {"left_eye", &k.left_eye}, {"right_eye", &k.right_eye}, {"nose", &k.nose},
      {"mouth_left", &k.mouth_left}, {"mouth_right", &k.mouth_right}};
  for (const auto& [name, slot] : named) {
    if (v.contains(name)) *slot = point_from(v.at(name));
  }
  if (v.contains("points68")) {
    std::vector<Point> pts;
    for (const auto& p : v.at("points68")) pts.push_back(point_from(p));
    k.points68 = std::move(pts);
  }
  return k;
}

json frame_metrics_json(const FrameMetrics& m) {
  return {{"frame_index", m.frame_index},     {"blur_sigma", m.blur_sigma},
          {"lab_mu", m.lab_mu},               {"lab_sigma", m.lab_sigma},
          {"glcm_contrast", m.glcm_contrast}, {"gradient_mean", m.gradient_mean},
          {"edge_density", m.edge_density},   {"freq_ratio", m.freq_ratio}};
}

json pair_json(const PairDeltas& p) {
  return {{"clip_index", p.clip_index},
          {"pair", json::array({p.first, p.second})},
          {"delta_blur", p.delta_blur},
          {"delta_color", p.delta_color},
          {"delta_texture", p.delta_texture},
          {"delta_gradient", p.delta_gradient},
          {"delta_edge_density", p.delta_edge_density},
          {"delta_freq_ratio", p.delta_freq_ratio},
          {"delta_boundary", p.delta_boundary}};
}

void collect_keys(const json& v, std::set<std::string>& keys) {
  if (v.is_object()) {
    for (const auto& [key, child] : v.items()) {
      keys.insert(key);
      collect_keys(child, keys);
    }
  } else if (v.is_array()) {
    for (const auto& child : v) collect_keys(child, keys);
  }
}

}  // namespace

FacialEvidence make_evidence(const FaceTrack& track, const IntegrityMetrics& metrics) {
  FacialEvidence ev;
  ev.coordinates = track;
  for (auto& e : ev.coordinates.entries) {
    e.confidence = quantize(e.confidence);
    e.landmarks = quantize(e.landmarks);
  }
  ev.integrity = metrics;
  for (auto& m : ev.integrity.per_frame) {
    for (double* f : {&m.blur_sigma, &m.lab_mu, &m.lab_sigma, &m.glcm_contrast, &m.gradient_mean,
                      &m.edge_density, &m.freq_ratio}) {
      *f = quantize(*f);
    }
  }
  for (auto& p : ev.integrity.per_pair) {
    for (double* f : {&p.delta_blur, &p.delta_color, &p.delta_texture, &p.delta_gradient, &p.delta_edge_density,
                      &p.delta_freq_ratio, &p.delta_boundary}) {
      *f = quantize(*f);
    }
  }
  for (auto& [name, s] : ev.integrity.summary) {
    s.mean = quantize(s.mean);
    s.max = quantize(s.max);
  }
  return ev;
}

json to_json(const IntegrityMetrics& metrics) {
  json per_frame = json::array();
  for (const auto& m : metrics.per_frame) per_frame.push_back(frame_metrics_json(m));
  json per_pair = json::array();
  for (const auto& p : metrics.per_pair) per_pair.push_back(pair_json(p));
  json summary = json::object();
  for (const auto& [name, s] : metrics.summary) summary[name] = {{"mean", s.mean}, {"max", s.max}};
  return {{"per_frame", std::move(per_frame)}, {"per_pair", std::move(per_pair)}, {"summary", std::move(summary)}};
}

json to_json(const FacialEvidence& evidence) {
  json entries = json::array();
  for (const auto& e : evidence.coordinates.entries) {
    const auto& b = e.refined_box;
    entries.push_back({{"frame_index", e.frame_index},
                       {"box", json::array({b.x0, b.y0, b.x1, b.y1})},
                       {"confidence", e.confidence},
                       {"landmarks", keypoints_json(e.landmarks)}});
  }
  return {{"schema_version", evidence.schema_version},
          {"coordinates", {{"entries", std::move(entries)}, {"gaps", evidence.coordinates.gaps}}},
          {"integrity", to_json(evidence.integrity)}};
}

FacialEvidence evidence_from_json(const json& doc) {
  try {
    FacialEvidence ev;
    ev.schema_version = doc.at("schema_version").get<std::string>();
    if (ev.schema_version != kEvidenceSchemaVersion) {
      throw Error(ErrorKind::SchemaError, "unsupported evidence schema_version " + ev.schema_version);
    }
    const json& coords = doc.at("coordinates");
    for (const auto& e : coords.at("entries")) {
      TrackEntry entry;
      entry.frame_index = e.at("frame_index").get<std::size_t>();
      const json& b = e.at("box");
      entry.refined_box = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
      entry.confidence = e.at("confidence").get<double>();
      entry.landmarks = keypoints_from(e.at("landmarks"));
      ev.coordinates.entries.push_back(std::move(entry));
    }
    ev.coordinates.gaps = coords.at("gaps").get<std::vector<std::size_t>>();

    const json& integ = doc.at("integrity");
    for (const auto& m : integ.at("per_frame")) {
      FrameMetrics fm;
      fm.frame_index = m.at("frame_index").get<std::size_t>();
      fm.blur_sigma = m.at("blur_sigma").get<double>();
      fm.lab_mu = m.at("lab_mu").get<double>();
      fm.lab_sigma = m.at("lab_sigma").get<double>();
      fm.glcm_contrast = m.at("glcm_contrast").get<double>();
      fm.gradient_mean = m.at("gradient_mean").get<double>();
      fm.edge_density = m.at("edge_density").get<double>();
      fm.freq_ratio = m.at("freq_ratio").get<double>();
      ev.integrity.per_frame.push_back(fm);
    }
    for (const auto& p : integ.at("per_pair")) {
      PairDeltas pd;
      pd.clip_index = p.at("clip_index").get<std::size_t>();
      pd.first = p.at("pair").at(0).get<std::size_t>();
      pd.second = p.at("pair").at(1).get<std::size_t>();
      pd.delta_blur = p.at("delta_blur").get<double>();
      pd.delta_color = p.at("delta_color").get<double>();
      pd.delta_texture = p.at("delta_texture").get<double>();
      pd.delta_gradient = p.at("delta_gradient").get<double>();
      pd.delta_edge_density = p.at("delta_edge_density").get<double>();
      pd.delta_freq_ratio = p.at("delta_freq_ratio").get<double>();
      pd.delta_boundary = p.at("delta_boundary").get<double>();
      ev.integrity.per_pair.push_back(pd);
    }
    for (const auto& [name, s] : integ.at("summary").items()) {
      ev.integrity.summary[name] = {s.at("mean").get<double>(), s.at("max").get<double>()};
    }
    return ev;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("malformed evidence: ") + e.what());
  }
}

std::string serialize_evidence(const FacialEvidence& evidence) { return canonical_dump(to_json(evidence)); }

SerializedEvidence serialize_evidence(const FaceTrack& track, const IntegrityMetrics& metrics) {
  SerializedEvidence out;
  out.evidence = make_evidence(track, metrics);
  out.bytes = serialize_evidence(out.evidence);
  return out;
}

FacialEvidence parse_evidence(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, std::string("evidence is not valid JSON: ") + e.what());
  }
  return evidence_from_json(doc);
}

std::set<std::string> evidence_keys(const FacialEvidence& evidence) {
  std::set<std::string> keys;
  collect_keys(to_json(evidence), keys);
  // Summary keys exist even with no pairs; make sure the metric names are
  // always citable.
  for (const char* name : kDeltaMetricNames) keys.insert(name);
  return keys;
}

}  // namespace fef
