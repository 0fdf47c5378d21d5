#include "fef/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "fef/canonical_json.hpp"
#include "fef/error.hpp"
#include "fef/fsutil.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace fef {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

Box padded_box(std::initializer_list<Point> points, double pad_x, double pad_y, FrameDims dims) {
  double min_x = points.begin()->x;
  double max_x = min_x;
  double min_y = points.begin()->y;
  double max_y = min_y;
  for (const auto& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  Box b{static_cast<int>(std::floor(min_x - pad_x)), static_cast<int>(std::floor(min_y - pad_y)),
        static_cast<int>(std::ceil(max_x + pad_x)), static_cast<int>(std::ceil(max_y + pad_y))};
  b.x0 = std::clamp(b.x0, 0, dims.width);
  b.x1 = std::clamp(b.x1, 0, dims.width);
  b.y0 = std::clamp(b.y0, 0, dims.height);
  b.y1 = std::clamp(b.y1, 0, dims.height);
  return b;
}

const Point& need(const std::optional<Point>& p, const char* name) {
  if (!p) throw Error(ErrorKind::MissingLandmark, std::string("keypoint \"") + name + "\" is missing");
  return *p;
}

FaceRegion parse_region(std::string_view name) {
  for (FaceRegion r : kAllRegions) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorKind::SchemaError, "unknown region \"" + std::string(name) + "\"");
}

}  // namespace

std::string_view to_string(ForgeryType type) {
  switch (type) {
    case ForgeryType::DeepFake: return "DeepFake";
    case ForgeryType::Face2Face: return "Face2Face";
    case ForgeryType::FaceSwap: return "FaceSwap";
    case ForgeryType::FaceShifter: return "FaceShifter";
    case ForgeryType::NeuralTexture: return "NeuralTexture";
    case ForgeryType::Real: return "Real";
  }
  return "Real";
}

ForgeryType parse_forgery_type(std::string_view name) {
  for (ForgeryType t : kAllForgeryTypes) {
    if (to_string(t) == name) return t;
  }
  throw Error(ErrorKind::TemplateError, "unknown forgery type \"" + std::string(name) + "\"");
}

std::string_view to_string(FaceRegion region) {
  switch (region) {
    case FaceRegion::Eyes: return "eyes";
    case FaceRegion::Face: return "face";
    case FaceRegion::Mouth: return "mouth";
    case FaceRegion::Nose: return "nose";
  }
  return "face";
}

std::size_t RegionMask::count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }

RegionMask diff_mask(const RgbImage& real_frame, const RgbImage& fake_frame, double tau) {
  if (real_frame.width() != fake_frame.width() || real_frame.height() != fake_frame.height()) {
    throw Error(ErrorKind::DimensionMismatch, "real and fake frames differ in size");
  }
  RegionMask mask;
  mask.width = real_frame.width();
  mask.height = real_frame.height();
  mask.threshold_used = tau;
  mask.bits.assign(static_cast<std::size_t>(mask.width) * static_cast<std::size_t>(mask.height), 0);
  const auto& a = real_frame.bytes();
  const auto& b = fake_frame.bytes();
  for (std::size_t px = 0; px < mask.bits.size(); ++px) {
    int diff = 0;
    for (std::size_t ch = 0; ch < 3; ++ch) diff = std::max(diff, std::abs(int{a[px * 3 + ch]} - int{b[px * 3 + ch]}));
    mask.bits[px] = diff > tau ? 1 : 0;
  }
  return mask;
}

RegionBoxes partition_regions(const Keypoints& landmarks, const Box& face_box, FrameDims dims, double padding) {
  const Point& le = need(landmarks.left_eye, "left_eye");
  const Point& re = need(landmarks.right_eye, "right_eye");
  const Point& nose = need(landmarks.nose, "nose");
  const Point& ml = need(landmarks.mouth_left, "mouth_left");
  const Point& mr = need(landmarks.mouth_right, "mouth_right");
  const double pad_x = padding * face_box.width();
  const double pad_y = padding * face_box.height();

  RegionBoxes boxes;
  boxes[FaceRegion::Eyes] = padded_box({le, re}, pad_x, pad_y, dims);
  boxes[FaceRegion::Nose] = padded_box({nose}, pad_x, pad_y, dims);
  boxes[FaceRegion::Mouth] = padded_box({ml, mr}, pad_x, pad_y, dims);
  Box face{std::clamp(face_box.x0, 0, dims.width), std::clamp(face_box.y0, 0, dims.height),
           std::clamp(face_box.x1, 0, dims.width), std::clamp(face_box.y1, 0, dims.height)};
  boxes[FaceRegion::Face] = face;
  return boxes;
}

RegionScore region_forgery_degree(const RegionMask& mask, const RegionBoxes& regions) {
  RegionScore scores;
  for (const auto& [region, box] : regions) {
    const Box clipped{std::max(box.x0, 0), std::max(box.y0, 0), std::min(box.x1, mask.width),
                      std::min(box.y1, mask.height)};
    if (clipped.empty()) {
      throw Error(ErrorKind::ZeroRegion, std::string(to_string(region)) + " region has zero area");
    }
    std::size_t hits = 0;
    for (int y = clipped.y0; y < clipped.y1; ++y) {
      for (int x = clipped.x0; x < clipped.x1; ++x) hits += mask.at(x, y) ? 1 : 0;
    }
    scores[region] = static_cast<double>(hits) / static_cast<double>(clipped.area());
  }
  return scores;
}

StructuredLabel build_structured_label(ForgeryType type, const FrameSequence& video, const FrameSequence* source,
                                       const FaceTrack& track, double tau, double padding) {
  StructuredLabel label;
  label.forgery_type = type;
  for (FaceRegion r : kAllRegions) label.region_scores[r] = 0.0;

  if (type == ForgeryType::Real) {
    for (const auto& e : track.entries) {
      if (e.frame_index >= video.size()) continue;
      FrameRegionSummary s;
      s.frame_index = e.frame_index;
      for (FaceRegion r : kAllRegions) s.scores[r] = 0.0;
      label.per_frame.push_back(std::move(s));
    }
    return label;
  }

  if (!source) throw Error(ErrorKind::PreconditionError, "a manipulated sample needs its source video");
  const FrameDims dims{video.height(), video.width()};
  for (const auto& e : track.entries) {
    if (e.frame_index >= video.size() || e.frame_index >= source->size()) continue;
    const RegionMask mask = diff_mask(source->frames[e.frame_index], video.frames[e.frame_index], tau);
    FrameRegionSummary s;
    s.frame_index = e.frame_index;
    s.mask_fraction = static_cast<double>(mask.count()) / static_cast<double>(mask.bits.size());
    s.scores = region_forgery_degree(mask, partition_regions(e.landmarks, e.refined_box, dims, padding));
    for (const auto& [region, degree] : s.scores) label.region_scores[region] += degree;
    label.per_frame.push_back(std::move(s));
  }
  if (label.per_frame.empty()) throw Error(ErrorKind::NoFaceDetected, "no tracked frame to compare");
  for (auto& [region, degree] : label.region_scores) degree /= static_cast<double>(label.per_frame.size());
  return label;
}

std::string format_region_scores(const RegionScore& scores) {
  std::string out;
  for (const auto& [region, degree] : scores) {
    if (!out.empty()) out += ", ";
    out += std::string(to_string(region)) + " " + fixed3(degree);
  }
  return out;
}

PromptTemplates PromptTemplates::defaults() {
  const std::string lead = "Is the person in this video real or fake? ";
  PromptTemplates t;
  t.by_type[ForgeryType::DeepFake] =
      lead + "Look for semantic errors such as duplicated eyebrows, blending seams along the face boundary and skin "
             "texture that does not match its surroundings.";
  t.by_type[ForgeryType::Face2Face] =
      lead + "Look at mouth and lip motion that disagrees with the rest of the face and at temporal jitter around "
             "the lower face.";
  t.by_type[ForgeryType::FaceSwap] =
      lead + "Look for colour mismatch between the face and the neck, visible seams at the face boundary and "
             "misaligned landmarks.";
  t.by_type[ForgeryType::FaceShifter] =
      lead + "Look for subtle blending around the eyes and face contour, occlusion errors and lighting that shifts "
             "between frames.";
  t.by_type[ForgeryType::NeuralTexture] =
      lead + "Look for edge artifacts, resolution anomalies, and lighting inconsistencies around the mouth.";
  t.by_type[ForgeryType::Real] =
      lead + "Check the face for blending seams and for texture or lighting that changes abruptly between frames.";
  return t;
}

PromptTemplates PromptTemplates::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::TemplateError, "template directory not found: " + dir.string());
  PromptTemplates t;
  for (ForgeryType type : kAllForgeryTypes) {
    const fs::path file = dir / (std::string(to_string(type)) + ".txt");
    if (!fs::exists(file)) continue;
    std::string text = read_text_file(file);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    t.by_type[type] = std::move(text);
  }
  return t;
}

std::string templated_rationale(const StructuredLabel& label) {
  const std::string scores = format_region_scores(label.region_scores);
  if (label.forgery_type == ForgeryType::Real) {
    return "Frame comparison finds no manipulated pixels in any facial region (" + scores +
           "). Face boundary, colour and texture stay consistent across the sampled frames, so the video is real.";
  }
  FaceRegion strongest = FaceRegion::Face;
  double best = -1.0;
  for (const auto& [region, degree] : label.region_scores) {
    if (region != FaceRegion::Face && degree > best) {
      best = degree;
      strongest = region;
    }
  }
  return "Frame comparison against the source footage localises a " + std::string(to_string(label.forgery_type)) +
         " manipulation. Forgery degree by region: " + scores + ". The strongest change inside the face is in the " +
         std::string(to_string(strongest)) + " region (" + fixed3(std::max(best, 0.0)) +
         "), which is inconsistent with an unedited recording, so the video is fake.";
}

ReasoningQuadruple assemble_quadruple(const std::string& video_ref, const StructuredLabel& label,
                                      const PromptTemplates& templates, const std::string& rationale_text) {
  auto it = templates.by_type.find(label.forgery_type);
  if (it == templates.by_type.end()) {
    throw Error(ErrorKind::TemplateError,
                "no prompt template for forgery type " + std::string(to_string(label.forgery_type)));
  }
  if (video_ref.empty() || rationale_text.empty()) {
    throw Error(ErrorKind::PreconditionError, "quadruple fields must be non-empty");
  }
  ReasoningQuadruple q;
  q.question = replace_all(it->second, "{forgery_type}", to_string(label.forgery_type));
  q.question = replace_all(q.question, "{region_scores}", format_region_scores(label.region_scores));
  if (q.question.empty()) throw Error(ErrorKind::TemplateError, "template renders an empty question");
  q.video_ref = video_ref;
  q.rationale = rationale_text;
  q.answer = label.forgery_type == ForgeryType::Real ? Label::Real : Label::Fake;
  q.forgery_type = label.forgery_type;
  for (const auto& [region, degree] : label.region_scores) q.region_scores[region] = quantize(degree);
  return q;
}

std::string to_jsonl_row(const ReasoningQuadruple& row) {
  json scores = json::object();
  for (const auto& [region, degree] : row.region_scores) scores[std::string(to_string(region))] = degree;
  return canonical_dump({{"question", row.question},
                         {"video_ref", row.video_ref},
                         {"rationale", row.rationale},
                         {"answer", std::string(to_string(row.answer))},
                         {"forgery_type", std::string(to_string(row.forgery_type))},
                         {"region_scores", std::move(scores)}});
}

ReasoningQuadruple quadruple_from_jsonl(std::string_view line) {
  try {
    const json doc = json::parse(line);
    ReasoningQuadruple q;
    q.question = doc.at("question").get<std::string>();
    q.video_ref = doc.at("video_ref").get<std::string>();
    q.rationale = doc.at("rationale").get<std::string>();
    const std::string answer = doc.at("answer").get<std::string>();
    if (answer != "real" && answer != "fake") throw Error(ErrorKind::SchemaError, "answer must be real or fake");
    q.answer = answer == "fake" ? Label::Fake : Label::Real;
    q.forgery_type = parse_forgery_type(doc.at("forgery_type").get<std::string>());
    for (const auto& [name, degree] : doc.at("region_scores").items()) {
      q.region_scores[parse_region(name)] = degree.get<double>();
    }
    if (q.question.empty() || q.video_ref.empty() || q.rationale.empty()) {
      throw Error(ErrorKind::SchemaError, "quadruple fields must be non-empty");
    }
    return q;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("malformed corpus row: ") + e.what());
  }
}

std::vector<ReasoningQuadruple> parse_corpus(std::string_view jsonl) {
  std::vector<ReasoningQuadruple> rows;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) rows.push_back(quadruple_from_jsonl(line));
    start = end + 1;
  }
  return rows;
}

CorpusStats corpus_stats(const std::vector<ReasoningQuadruple>& rows) {
  CorpusStats stats;
  for (ForgeryType t : kAllForgeryTypes) stats.per_type[t] = 0;
  for (const auto& r : rows) {
    (r.answer == Label::Fake ? stats.fake_count : stats.real_count)++;
    ++stats.per_type[r.forgery_type];
  }
  const auto total = static_cast<double>(rows.size());
  if (!rows.empty()) {
    stats.fake_fraction = static_cast<double>(stats.fake_count) / total;
    stats.real_fraction = static_cast<double>(stats.real_count) / total;
  }
  return stats;
}

json to_json(const CorpusStats& stats) {
  json per_type = json::object();
  for (const auto& [type, count] : stats.per_type) per_type[std::string(to_string(type))] = count;
  return {{"fake_count", stats.fake_count},       {"real_count", stats.real_count},
          {"fake_fraction", stats.fake_fraction}, {"real_fraction", stats.real_fraction},
          {"total", stats.fake_count + stats.real_count}, {"per_type", std::move(per_type)}};
}

}  // namespace fef
