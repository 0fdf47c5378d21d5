#include "fef/reasoning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include <httplib.h>

#include "fef/parallel.hpp"

using nlohmann::json;

namespace fef {

namespace {

constexpr const char* kStage1System =
    "You are a video forensics analyst. Base every statement on the supplied frame grids and the structured facial "
    "evidence, and cite evidence fields by their JSON key names. Put your full reasoning inside <think></think>.";

constexpr const char* kStage2System =
    "You are a video forensics analyst deciding whether a video is real or fake. Use the frame grids and the "
    "supplied reasoning. Optionally restate your reasoning inside <think></think>, then give the final decision "
    "inside <answer></answer> as the word real or fake, optionally followed by (confidence p) where p is the "
    "probability that the video is fake.";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::vector<const FrameGrid*> in_clip_order(std::span<const FrameGrid> grids) {
  std::vector<const FrameGrid*> ordered;
  for (const auto& g : grids) ordered.push_back(&g);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const FrameGrid* a, const FrameGrid* b) { return a->clip_index < b->clip_index; });
  return ordered;
}

std::vector<ImagePart> grid_images(std::span<const FrameGrid> grids) {
  std::vector<ImagePart> parts;
  for (const FrameGrid* g : in_clip_order(grids)) parts.push_back({"image/png", base64_encode(encode_png(g->image))});
  return parts;
}

std::string describe_grids(std::span<const FrameGrid> grids, bool attached) {
  if (grids.empty()) return "No frame grids are available.";
  std::string out = std::to_string(grids.size()) + " temporal grids" +
                    (attached ? " are attached in clip order" : " were sampled (not attached)") +
                    "; each is a 3x3 layout read row by row. Source frames per clip:";
  for (const FrameGrid* g : in_clip_order(grids)) {
    out += " clip " + std::to_string(g->clip_index) + " [";
    for (std::size_t i = 0; i < g->cell_map.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(g->cell_map[i]);
    }
    out += "]";
  }
  return out + ".";
}

}  // namespace

ThoughtPrompt ThoughtPrompt::defaults() {
  return {"thought-v1",
          "Examine the consecutive video frames together with the fine-grained facial evidence and explain, step by "
          "step, which measurements indicate manipulation or authenticity.\n\nFrames: {frames}\n\nFacial evidence "
          "(JSON):\n{evidence}"};
}

void ThoughtPrompt::validate() const {
  if (text.empty()) throw Error(ErrorKind::PreconditionError, "thought prompt is empty");
  if (text.find("{evidence}") == std::string::npos) {
    throw Error(ErrorKind::PreconditionError, "thought prompt lacks the {evidence} placeholder");
  }
}

QuestionPrompt QuestionPrompt::defaults() {
  return {"question-v1", "Is the person in this video real or fake? Answer with real or fake."};
}

void QuestionPrompt::validate() const {
  if (text.empty()) throw Error(ErrorKind::PreconditionError, "question prompt is empty");
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorKind::ConfigError, "endpoint base_url is empty");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorKind::ConfigError, "endpoint timeout must be positive");
  if (max_inflight < 1) throw Error(ErrorKind::ConfigError, "max_inflight must be at least 1");
  if (retries < 0) throw Error(ErrorKind::ConfigError, "retries must be non-negative");
}

json ChatRequest::to_wire() const {
  json messages_json = json::array();
  for (const auto& m : messages) {
    json content;
    if (m.images.empty()) {
      content = m.text;
    } else {
      content = json::array();
      content.push_back({{"type", "text"}, {"text", m.text}});
      for (const auto& img : m.images) {
        content.push_back(
            {{"type", "image_url"}, {"image_url", {{"url", "data:" + img.mime_type + ";base64," + img.base64}}}});
      }
    }
    messages_json.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  return {{"model", model}, {"messages", std::move(messages_json)}, {"temperature", temperature}};
}

std::size_t ChatRequest::image_count() const {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.images.size();
  return n;
}

HttpEndpoint::HttpEndpoint(EndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::ConfigError, "endpoint URL needs a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpEndpoint::complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  if (!client.is_valid()) throw Error(ErrorKind::EndpointError, "unsupported endpoint URL " + origin_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (config_.auth_token) headers.emplace("Authorization", "Bearer " + *config_.auth_token);

  const std::string body = request.to_wire().dump();
  const std::string path = path_prefix_ + "/chat/completions";
  httplib::Result res;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    res = client.Post(path, headers, body, "application/json");
    if (res) break;
  }
  if (!res) {
    throw Error(ErrorKind::EndpointError, "request to " + origin_ + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorKind::EndpointError, "endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const json doc = json::parse(res->body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::EndpointError, std::string("unexpected response body: ") + e.what());
  }
}

ResponseParseError::ResponseParseError(ErrorKind kind, const std::string& message, std::string raw_response)
    : Error(kind, message), raw_(std::move(raw_response)) {}

std::optional<std::string> parse_tagged(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto start = text.find(open);
  if (start == std::string_view::npos) return std::nullopt;
  const auto body = start + open.size();
  const auto stop = text.find(close, body);
  if (stop == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(body, stop - body));
}

ParsedLabel parse_answer_label(std::string_view answer, double threshold) {
  const std::string text(answer);
  ParsedLabel out;
  static const std::regex confidence_re(
      R"((confidence|probability|score)\s*(?:of\s+fake\s*)?[:=]?\s*\(?\s*([0-9]+(?:\.[0-9]+)?|\.[0-9]+)\s*(%)?)",
      std::regex::icase);
  std::smatch m;
  if (std::regex_search(text, m, confidence_re)) {
    double value = std::stod(m[2].str());
    if (m[3].matched) value /= 100.0;
    if (value < 0.0 || value > 1.0) {
      throw ResponseParseError(ErrorKind::LabelParseError, "confidence outside [0, 1]", text);
    }
    out.confidence = value;
    out.label = value >= threshold ? Label::Fake : Label::Real;
    return out;
  }
  static const std::regex word_re(R"(\b(real|fake)\b)", std::regex::icase);
  if (std::regex_search(text, m, word_re)) {
    out.label = lower(m[1].str()) == "fake" ? Label::Fake : Label::Real;
    return out;
  }
  throw ResponseParseError(ErrorKind::LabelParseError, "answer names neither real nor fake", text);
}

std::vector<std::string> cited_keys(std::string_view text, const std::set<std::string>& keys) {
  std::vector<std::string> out;
  for (const auto& key : keys) {
    for (auto pos = text.find(key); pos != std::string_view::npos; pos = text.find(key, pos + 1)) {
      const bool left_ok = pos == 0 || !is_ident(text[pos - 1]);
      const auto end = pos + key.size();
      const bool right_ok = end >= text.size() || !is_ident(text[end]);
      if (left_ok && right_ok) {
        out.push_back(key);
        break;
      }
    }
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = std::uint32_t{bytes[i]} << 16;
    if (rest == 2) v |= std::uint32_t{bytes[i + 1]} << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

ChatRequest build_stage1_request(std::span<const FrameGrid> grids, const FacialEvidence& evidence,
                                 const ThoughtPrompt& prompt, const EndpointConfig& config) {
  prompt.validate();
  if (evidence.empty()) throw Error(ErrorKind::PreconditionError, "facial evidence is empty");
  const std::string evidence_json = serialize_evidence(evidence);

  ChatRequest req;
  req.model = config.model_name;
  req.temperature = config.temperature;
  req.messages.push_back({"system", kStage1System, {}});
  ChatMessage user{"user", "", {}};
  user.text = replace_all(prompt.text, "{frames}", describe_grids(grids, config.supports_images));
  user.text = replace_all(user.text, "{evidence}", evidence_json);
  if (config.supports_images) user.images = grid_images(grids);
  req.messages.push_back(std::move(user));
  return req;
}

ChatRequest build_stage2_request(std::span<const FrameGrid> grids, const Rationale& rationale,
                                 const QuestionPrompt& question, const EndpointConfig& config,
                                 const FacialEvidence* evidence) {
  question.validate();
  if (rationale.text.empty()) throw Error(ErrorKind::PreconditionError, "rationale is empty");
  ChatRequest req;
  req.model = config.model_name;
  req.temperature = config.temperature;
  req.messages.push_back({"system", kStage2System, {}});
  ChatMessage user{"user", "", {}};
  user.text = question.text + "\n\nFrames: " + describe_grids(grids, config.supports_images) +
              "\n\nReasoning from the evidence stage:\n<think>" + rationale.text + "</think>";
  if (evidence) user.text += "\n\nFacial evidence (JSON):\n" + serialize_evidence(*evidence);
  if (config.supports_images) user.images = grid_images(grids);
  req.messages.push_back(std::move(user));
  return req;
}

Rationale generate_rationale(const ChatRequest& request, InferenceEndpoint& endpoint,
                             const std::set<std::string>& evidence_keys) {
  Rationale r;
  r.raw_response = endpoint.complete(request);
  auto think = parse_tagged(r.raw_response, "think");
  if (!think) throw ResponseParseError(ErrorKind::MissingTagError, "response has no <think> span", r.raw_response);
  if (think->empty()) throw ResponseParseError(ErrorKind::MissingTagError, "<think> span is empty", r.raw_response);
  r.text = std::move(*think);
  r.cited_evidence_keys = cited_keys(r.text, evidence_keys);
  return r;
}

Verdict generate_verdict(std::span<const FrameGrid> grids, const Rationale& rationale, const QuestionPrompt& question,
                         const EndpointConfig& config, InferenceEndpoint& endpoint, const VerdictOptions& options,
                         const FacialEvidence* evidence) {
  const ChatRequest req =
      build_stage2_request(grids, rationale, question, config, options.include_evidence ? evidence : nullptr);
  Verdict v;
  v.raw_response = endpoint.complete(req);
  auto answer = parse_tagged(v.raw_response, "answer");
  if (!answer) throw ResponseParseError(ErrorKind::MissingTagError, "response has no <answer> span", v.raw_response);
  v.answer = *answer;
  v.think = parse_tagged(v.raw_response, "think").value_or(rationale.text);
  try {
    const ParsedLabel parsed = parse_answer_label(v.answer, options.threshold);
    v.label = parsed.label;
    v.confidence = parsed.confidence;
  } catch (const ResponseParseError& e) {
    throw ResponseParseError(e.kind(), e.what(), v.raw_response);
  }
  return v;
}

std::vector<std::string> complete_all(InferenceEndpoint& endpoint, std::span<const ChatRequest> requests,
                                      std::size_t max_inflight) {
  return parallel_map(requests.size(), static_cast<unsigned>(std::max<std::size_t>(max_inflight, 1)),
                      [&](std::size_t i) { return endpoint.complete(requests[i]); });
}

ReasoningResult run_reasoning(std::span<const FrameGrid> grids, const FacialEvidence& evidence,
                              const ThoughtPrompt& thought, const QuestionPrompt& question,
                              const EndpointConfig& config, InferenceEndpoint& endpoint,
                              const ReasoningOptions& options) {
  config.validate();
  if (options.sample_count < 1) throw Error(ErrorKind::ConfigError, "sample_count must be at least 1");
  const ChatRequest stage1 = build_stage1_request(grids, evidence, thought, config);
  const std::set<std::string> keys = evidence_keys(evidence);

  // Each sample keeps at most one request outstanding, so bounding the
  // sample workers bounds in-flight requests.
  auto samples = parallel_map(options.sample_count, static_cast<unsigned>(config.max_inflight), [&](std::size_t) {
    Rationale r = generate_rationale(stage1, endpoint, keys);
    Verdict v = generate_verdict(grids, r, question, config, endpoint, options.verdict, &evidence);
    return std::pair(std::move(r), std::move(v));
  });

  ReasoningResult result;
  std::size_t fakes = 0;
  for (auto& [r, v] : samples) {
    if (v.label == Label::Fake) ++fakes;
    result.rationales.push_back(std::move(r));
    result.verdicts.push_back(std::move(v));
  }
  const Label majority = 2 * fakes >= result.verdicts.size() ? Label::Fake : Label::Real;
  for (const auto& v : result.verdicts) {
    if (v.label == majority) {
      result.final_verdict = v;
      break;
    }
  }
  return result;
}

json to_json(const Verdict& verdict) {
  json doc = {{"label", std::string(to_string(verdict.label))},
              {"think", verdict.think},
              {"answer", verdict.answer},
              {"raw_response", verdict.raw_response}};
  if (verdict.confidence) doc["confidence"] = *verdict.confidence;
  return doc;
}

}  // namespace fef
