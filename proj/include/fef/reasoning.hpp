#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fef/error.hpp"
#include "fef/evidence.hpp"
#include "fef/frame_ingest.hpp"
#include "fef/heuristic.hpp"

namespace fef {

struct ThoughtPrompt {
  std::string template_id;
  std::string text;  // must contain {evidence}; {frames} is optional

  static ThoughtPrompt defaults();
  void validate() const;
};

struct QuestionPrompt {
  std::string template_id;
  std::string text;

  static QuestionPrompt defaults();
  void validate() const;
};

struct EndpointConfig {
  std::string base_url;
  std::string model_name;
  bool supports_images = true;
  double timeout_seconds = 120.0;
  std::size_t max_inflight = 1;
  std::optional<std::string> auth_token;
  double temperature = 0.0;
  int retries = 1;  // extra attempts after a transport failure

  void validate() const;
};

struct ImagePart {
  std::string mime_type = "image/png";
  std::string base64;

  friend bool operator==(const ImagePart&, const ImagePart&) = default;
};

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string text;
  std::vector<ImagePart> images;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;

  // OpenAI-style chat-completions body. Messages without images carry a
  // plain string; with images, a text part followed by image_url parts.
  nlohmann::json to_wire() const;
  std::size_t image_count() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

// A chat-style model. complete() returns the assistant message text and
// throws Error(EndpointError) on transport or protocol failure.
class InferenceEndpoint {
 public:
  virtual ~InferenceEndpoint() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// POSTs to {base_url}/chat/completions. Transport failures are retried
// `retries` times; HTTP errors and malformed bodies are not.
class HttpEndpoint final : public InferenceEndpoint {
 public:
  explicit HttpEndpoint(EndpointConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // path part of base_url, no trailing slash
};

// Raised when a response lacks the expected tags or label. The verbatim
// response stays attached for auditing.
class ResponseParseError : public Error {
 public:
  ResponseParseError(ErrorKind kind, const std::string& message, std::string raw_response);
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

struct Rationale {
  std::string text;
  std::vector<std::string> cited_evidence_keys;  // sorted
  std::string raw_response;
};

struct Verdict {
  Label label = Label::Real;
  std::optional<double> confidence;
  std::string think;
  std::string answer;
  std::string raw_response;
};

// First <tag>...</tag> span; spans do not nest.
std::optional<std::string> parse_tagged(std::string_view text, std::string_view tag);

struct ParsedLabel {
  Label label = Label::Real;
  std::optional<double> confidence;
};

// Reads "real"/"fake" (any case) from an answer span. A number introduced by
// confidence/probability/score (optionally a percentage) overrides the word:
// fake iff it is >= threshold.
ParsedLabel parse_answer_label(std::string_view answer, double threshold = kDefaultDecisionThreshold);

// Evidence keys that appear as whole identifiers in the text.
std::vector<std::string> cited_keys(std::string_view text, const std::set<std::string>& keys);

std::string base64_encode(std::span<const std::uint8_t> bytes);

ChatRequest build_stage1_request(std::span<const FrameGrid> grids, const FacialEvidence& evidence,
                                 const ThoughtPrompt& prompt, const EndpointConfig& config);

struct VerdictOptions {
  double threshold = kDefaultDecisionThreshold;
  // Also attach the facial evidence to the answer request.
  bool include_evidence = false;
};

ChatRequest build_stage2_request(std::span<const FrameGrid> grids, const Rationale& rationale,
                                 const QuestionPrompt& question, const EndpointConfig& config,
                                 const FacialEvidence* evidence = nullptr);

Rationale generate_rationale(const ChatRequest& request, InferenceEndpoint& endpoint,
                             const std::set<std::string>& evidence_keys);

Verdict generate_verdict(std::span<const FrameGrid> grids, const Rationale& rationale,
                         const QuestionPrompt& question, const EndpointConfig& config,
                         InferenceEndpoint& endpoint, const VerdictOptions& options = {},
                         const FacialEvidence* evidence = nullptr);

// Sends every request with at most max_inflight outstanding; responses come
// back in request order.
std::vector<std::string> complete_all(InferenceEndpoint& endpoint, std::span<const ChatRequest> requests,
                                      std::size_t max_inflight);

struct ReasoningOptions {
  std::size_t sample_count = 1;
  VerdictOptions verdict;
};

struct ReasoningResult {
  std::vector<Rationale> rationales;
  std::vector<Verdict> verdicts;
  Verdict final_verdict;  // majority label, ties resolved to fake
};

// Rationale then answer, repeated sample_count times (up to max_inflight
// samples in flight).
ReasoningResult run_reasoning(std::span<const FrameGrid> grids, const FacialEvidence& evidence,
                              const ThoughtPrompt& thought, const QuestionPrompt& question,
                              const EndpointConfig& config, InferenceEndpoint& endpoint,
                              const ReasoningOptions& options = {});

nlohmann::json to_json(const Verdict& verdict);

}  // namespace fef
