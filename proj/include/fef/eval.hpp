#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fef/heuristic.hpp"

namespace fef {

struct DetectionRecord {
  Label truth = Label::Real;
  double score = 0.0;  // probability of "fake"
  std::optional<Label> predicted;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

struct DetectionScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// Predicted fake iff score >= threshold. F1 is taken on the fake class and
// is 0 when precision + recall is 0.
DetectionScores accuracy_f1(std::span<const DetectionRecord> records,
                            double threshold = kDefaultDecisionThreshold);

// Probability that a random fake outscores a random real, ties counting 1/2.
double auc(std::span<const DetectionRecord> records);

struct TextPair {
  std::string candidate;
  std::vector<std::string> references;
};

// Lower-cased maximal runs of letters and digits; every other ASCII byte
// separates tokens. Bytes >= 0x80 are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

double bleu4(const TextPair& pair);
double rouge_l(const TextPair& pair, double beta = 1.2);
// METEOR restricted to exact unigram matches (no stemming or synonyms).
double meteor_exact(const TextPair& pair);
// Corpus CIDEr (x10 scale): mean over pairs of the per-n tf-idf cosine,
// averaged over n = 1..4 and over each pair's references.
double cider(std::span<const TextPair> corpus);
std::vector<double> cider_per_pair(std::span<const TextPair> corpus);

double css(std::span<const double> candidate, std::span<const double> reference);

// Unigram tf-idf fallback for CSS when no embeddings are supplied.
class TfidfVectorizer {
 public:
  explicit TfidfVectorizer(std::span<const std::string> documents);
  std::vector<double> transform(std::string_view text) const;
  std::size_t dimension() const { return vocabulary_.size(); }

 private:
  std::vector<std::string> vocabulary_;  // sorted
  std::vector<double> idf_;
};

struct EvalRow {
  DetectionRecord detection;
  std::optional<TextPair> text;
  std::optional<std::vector<double>> embedding_candidate;
  std::optional<std::vector<double>> embedding_reference;
};

std::vector<EvalRow> parse_eval_rows(std::string_view jsonl);

struct EvalReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::optional<double> auc_value;
  std::optional<double> cider_value;
  std::optional<double> rouge_l_value;
  std::optional<double> bleu4_value;
  std::optional<double> meteor_value;
  std::optional<double> css_value;
  std::size_t records = 0;
  std::size_t text_pairs = 0;
  std::size_t real_count = 0;
  std::size_t fake_count = 0;
  double threshold = kDefaultDecisionThreshold;
  std::vector<std::string> notes;
};

EvalReport evaluate(std::span<const EvalRow> rows, double threshold = kDefaultDecisionThreshold);
nlohmann::json to_json(const EvalReport& report);

}  // namespace fef
