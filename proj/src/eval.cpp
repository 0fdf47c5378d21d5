#include "fef/eval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fef/error.hpp"

using nlohmann::json;

namespace fef {

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::string, std::size_t>;

NgramCounts ngram_counts(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

Tokens candidate_tokens(const TextPair& pair) {
  if (pair.references.empty()) throw Error(ErrorKind::PreconditionError, "text pair has no references");
  Tokens c = tokenize(pair.candidate);
  if (c.empty()) throw Error(ErrorKind::EmptyInput, "candidate text has no tokens");
  return c;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double meteor_single(const Tokens& cand, const Tokens& ref) {
  if (ref.empty()) return 0.0;
  std::map<std::string, std::vector<std::size_t>> free_positions;
  for (std::size_t j = 0; j < ref.size(); ++j) free_positions[ref[j]].push_back(j);
  std::vector<bool> used(ref.size(), false);

  // Greedy left-to-right alignment that prefers extending the current chunk.
  std::vector<std::optional<std::size_t>> align(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    auto it = free_positions.find(cand[i]);
    if (it == free_positions.end()) continue;
    std::optional<std::size_t> choice;
    if (i > 0 && align[i - 1]) {
      const std::size_t next = *align[i - 1] + 1;
      if (next < ref.size() && !used[next] && ref[next] == cand[i]) choice = next;
    }
    if (!choice) {
      for (std::size_t j : it->second) {
        if (!used[j]) {
          choice = j;
          break;
        }
      }
    }
    if (choice) {
      used[*choice] = true;
      align[i] = choice;
    }
  }

  std::size_t matches = 0;
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (!align[i]) continue;
    ++matches;
    const bool continues = i > 0 && align[i - 1] && *align[i - 1] + 1 == *align[i];
    if (!continues) ++chunks;
  }
  if (matches == 0) return 0.0;
  const double m = static_cast<double>(matches);
  const double precision = m / static_cast<double>(cand.size());
  const double recall = m / static_cast<double>(ref.size());
  const double f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return f_mean * (1.0 - penalty);
}

Label parse_label(const json& v) {
  std::string s = v.get<std::string>();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "real") return Label::Real;
  if (s == "fake") return Label::Fake;
  throw Error(ErrorKind::SchemaError, "label must be \"real\" or \"fake\", got \"" + s + "\"");
}

}  // namespace

DetectionScores accuracy_f1(std::span<const DetectionRecord> records, double threshold) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no detection records");
  DetectionScores s;
  for (const auto& r : records) {
    const bool predicted_fake = r.score >= threshold;
    const bool truly_fake = r.truth == Label::Fake;
    if (predicted_fake && truly_fake) ++s.counts.tp;
    if (predicted_fake && !truly_fake) ++s.counts.fp;
    if (!predicted_fake && !truly_fake) ++s.counts.tn;
    if (!predicted_fake && truly_fake) ++s.counts.fn;
  }
  const auto& c = s.counts;
  s.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(records.size());
  s.precision = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = (c.tp + c.fn) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double auc(std::span<const DetectionRecord> records) {
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(records.size());
  std::size_t fakes = 0;
  for (const auto& r : records) {
    scored.emplace_back(r.score, r.truth == Label::Fake);
    if (r.truth == Label::Fake) ++fakes;
  }
  const std::size_t reals = records.size() - fakes;
  if (fakes == 0 || reals == 0) throw Error(ErrorKind::DegenerateClasses, "AUC needs both real and fake records");
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Mann-Whitney U: for each fake, count reals strictly below plus half of
  // the tied reals. Kept in half-units so the sum stays an exact integer.
  unsigned long long twice_u = 0;
  std::size_t reals_below = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    std::size_t tied_fakes = 0;
    std::size_t tied_reals = 0;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      (scored[j].second ? tied_fakes : tied_reals)++;
      ++j;
    }
    twice_u += tied_fakes * (2 * reals_below + tied_reals);
    reals_below += tied_reals;
    i = j;
  }
  return static_cast<double>(twice_u) / 2.0 / (static_cast<double>(fakes) * static_cast<double>(reals));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double bleu4(const TextPair& pair) {
  const Tokens cand = candidate_tokens(pair);
  std::vector<Tokens> refs;
  for (const auto& r : pair.references) refs.push_back(tokenize(r));

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts cc = ngram_counts(cand, n);
    std::map<std::string, std::size_t> max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, count] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], count);
    }
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (const auto& [g, count] : cc) {
      total += count;
      if (auto it = max_ref.find(g); it != max_ref.end()) clipped += std::min(count, it->second);
    }
    const double precision = total ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    log_sum += std::log(std::max(precision, 1e-9));
  }

  // Effective reference length: closest to the candidate, shorter on ties.
  const auto c = static_cast<double>(cand.size());
  double r = static_cast<double>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  const double bp = std::min(1.0, std::exp(1.0 - r / c));
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

double rouge_l(const TextPair& pair, double beta) {
  const Tokens cand = candidate_tokens(pair);
  double best = 0.0;
  for (const auto& ref_text : pair.references) {
    const Tokens ref = tokenize(ref_text);
    if (ref.empty()) continue;
    const auto lcs = static_cast<double>(lcs_length(cand, ref));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(cand.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double b2 = beta * beta;
    best = std::max(best, (1.0 + b2) * r * p / (r + b2 * p));
  }
  return best;
}

double meteor_exact(const TextPair& pair) {
  const Tokens cand = candidate_tokens(pair);
  double best = 0.0;
  for (const auto& ref : pair.references) best = std::max(best, meteor_single(cand, tokenize(ref)));
  return best;
}

std::vector<double> cider_per_pair(std::span<const TextPair> corpus) {
  if (corpus.size() < 2) throw Error(ErrorKind::CorpusTooSmall, "CIDEr needs at least two text pairs");
  const auto n_docs = static_cast<double>(corpus.size());

  struct Doc {
    std::array<NgramCounts, 4> cand;
    std::vector<std::array<NgramCounts, 4>> refs;
  };
  std::vector<Doc> docs;
  docs.reserve(corpus.size());
  std::array<std::map<std::string, std::size_t>, 4> df;
  for (const auto& pair : corpus) {
    Doc d;
    const Tokens cand = candidate_tokens(pair);
    for (std::size_t n = 0; n < 4; ++n) d.cand[n] = ngram_counts(cand, n + 1);
    std::array<std::set<std::string>, 4> seen;
    for (const auto& ref_text : pair.references) {
      const Tokens ref = tokenize(ref_text);
      std::array<NgramCounts, 4> grams;
      for (std::size_t n = 0; n < 4; ++n) {
        grams[n] = ngram_counts(ref, n + 1);
        for (const auto& [g, count] : grams[n]) seen[n].insert(g);
      }
      d.refs.push_back(std::move(grams));
    }
    for (std::size_t n = 0; n < 4; ++n) {
      for (const auto& g : seen[n]) ++df[n][g];
    }
    docs.push_back(std::move(d));
  }

  auto idf = [&](std::size_t n, const std::string& g) {
    const auto it = df[n].find(g);
    const double freq = it == df[n].end() ? 0.0 : static_cast<double>(it->second);
    return std::log(n_docs / (1.0 + freq));
  };
  auto cosine = [&](std::size_t n, const NgramCounts& a, const NgramCounts& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [g, count] : a) {
      const double w = static_cast<double>(count) * idf(n, g);
      na += w * w;
      if (auto it = b.find(g); it != b.end()) dot += w * static_cast<double>(it->second) * idf(n, g);
    }
    for (const auto& [g, count] : b) {
      const double w = static_cast<double>(count) * idf(n, g);
      nb += w * w;
    }
    return (na > 0.0 && nb > 0.0) ? dot / (std::sqrt(na) * std::sqrt(nb)) : 0.0;
  };

  std::vector<double> scores;
  scores.reserve(docs.size());
  for (const auto& d : docs) {
    double total = 0.0;
    for (const auto& ref : d.refs) {
      double per_n = 0.0;
      for (std::size_t n = 0; n < 4; ++n) per_n += cosine(n, d.cand[n], ref[n]);
      total += per_n / 4.0;
    }
    scores.push_back(10.0 * total / static_cast<double>(d.refs.size()));
  }
  return scores;
}

double cider(std::span<const TextPair> corpus) {
  const auto scores = cider_per_pair(corpus);
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

double css(std::span<const double> candidate, std::span<const double> reference) {
  if (candidate.size() != reference.size()) {
    throw Error(ErrorKind::DimensionMismatch, "embedding dimensions differ");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    dot += candidate[i] * reference[i];
    na += candidate[i] * candidate[i];
    nb += reference[i] * reference[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

TfidfVectorizer::TfidfVectorizer(std::span<const std::string> documents) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    const Tokens tokens = tokenize(doc);
    for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) ++df[t];
  }
  const auto n = static_cast<double>(documents.size());
  for (const auto& [term, freq] : df) {
    vocabulary_.push_back(term);
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(freq))) + 1.0);
  }
}

std::vector<double> TfidfVectorizer::transform(std::string_view text) const {
  std::vector<double> v(vocabulary_.size(), 0.0);
  for (const auto& t : tokenize(text)) {
    auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), t);
    if (it != vocabulary_.end() && *it == t) {
      const auto i = static_cast<std::size_t>(it - vocabulary_.begin());
      v[i] += idf_[i];
    }
  }
  return v;
}

std::vector<EvalRow> parse_eval_rows(std::string_view jsonl) {
  std::vector<EvalRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    try {
      const json doc = json::parse(line);
      EvalRow row;
      row.detection.truth = parse_label(doc.at("truth"));
      row.detection.score = doc.at("score").get<double>();
      if (!(row.detection.score >= 0.0 && row.detection.score <= 1.0)) {
        throw Error(ErrorKind::RangeError, where + ": score outside [0, 1]");
      }
      if (doc.contains("predicted")) row.detection.predicted = parse_label(doc.at("predicted"));
      if (doc.contains("candidate")) {
        TextPair pair;
        pair.candidate = doc.at("candidate").get<std::string>();
        pair.references = doc.at("references").get<std::vector<std::string>>();
        if (pair.references.empty()) throw Error(ErrorKind::SchemaError, where + ": references is empty");
        row.text = std::move(pair);
      }
      if (doc.contains("embedding_candidate")) {
        row.embedding_candidate = doc.at("embedding_candidate").get<std::vector<double>>();
      }
      if (doc.contains("embedding_reference")) {
        row.embedding_reference = doc.at("embedding_reference").get<std::vector<double>>();
      }
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::SchemaError, where + ": " + e.what());
    }
    if (end == jsonl.size()) break;
  }
  return rows;
}

EvalReport evaluate(std::span<const EvalRow> rows, double threshold) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation rows");
  EvalReport report;
  report.threshold = threshold;
  report.records = rows.size();
  report.notes.push_back("METEOR uses exact unigram matching only (no stemming or synonym modules)");

  std::vector<DetectionRecord> records;
  std::vector<TextPair> pairs;
  std::vector<const EvalRow*> text_rows;
  for (const auto& row : rows) {
    records.push_back(row.detection);
    (row.detection.truth == Label::Fake ? report.fake_count : report.real_count)++;
    if (row.text) {
      pairs.push_back(*row.text);
      text_rows.push_back(&row);
    }
  }
  const DetectionScores det = accuracy_f1(records, threshold);
  report.accuracy = det.accuracy;
  report.f1 = det.f1;
  if (report.fake_count > 0 && report.real_count > 0) {
    report.auc_value = auc(records);
  } else {
    report.notes.push_back("AUC undefined: only one class present");
  }

  report.text_pairs = pairs.size();
  if (!pairs.empty()) {
    double bleu = 0.0;
    double rouge = 0.0;
    double meteor = 0.0;
    double cos = 0.0;
    std::vector<std::string> documents;
    for (const auto& p : pairs) {
      documents.push_back(p.candidate);
      documents.insert(documents.end(), p.references.begin(), p.references.end());
    }
    const TfidfVectorizer vectorizer(documents);
    bool used_fallback = false;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      bleu += bleu4(pairs[i]);
      rouge += rouge_l(pairs[i]);
      meteor += meteor_exact(pairs[i]);
      const EvalRow& row = *text_rows[i];
      if (row.embedding_candidate && row.embedding_reference) {
        cos += css(*row.embedding_candidate, *row.embedding_reference);
      } else {
        used_fallback = true;
        const auto cv = vectorizer.transform(pairs[i].candidate);
        double best = -1.0;
        for (const auto& ref : pairs[i].references) {
          const auto rv = vectorizer.transform(ref);
          const bool zero = std::all_of(rv.begin(), rv.end(), [](double x) { return x == 0.0; });
          best = std::max(best, zero ? 0.0 : css(cv, rv));
        }
        cos += best;
      }
    }
    const auto n = static_cast<double>(pairs.size());
    report.bleu4_value = bleu / n;
    report.rouge_l_value = rouge / n;
    report.meteor_value = meteor / n;
    report.css_value = cos / n;
    if (used_fallback) report.notes.push_back("CSS computed with the built-in tf-idf vectorizer where embeddings were absent");
    if (pairs.size() >= 2) {
      report.cider_value = cider(pairs);
    } else {
      report.notes.push_back("CIDEr undefined: needs at least two text pairs");
    }
  }
  return report;
}

json to_json(const EvalReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"detection", {{"acc", report.accuracy}, {"auc", opt(report.auc_value)}, {"f1", report.f1}}},
          {"text",
           {{"cider", opt(report.cider_value)},
            {"rouge_l", opt(report.rouge_l_value)},
            {"bleu4", opt(report.bleu4_value)},
            {"meteor", opt(report.meteor_value)},
            {"css", opt(report.css_value)}}},
          {"counts",
           {{"records", report.records},
            {"text_pairs", report.text_pairs},
            {"real", report.real_count},
            {"fake", report.fake_count}}},
          {"threshold", report.threshold},
          {"notes", report.notes}};
}

}  // namespace fef
