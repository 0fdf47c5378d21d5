#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "error_kind.hpp"
#include "fef/eval.hpp"
#include "oracles.hpp"

using namespace fef;

namespace {

DetectionRecord rec(Label truth, double score) { return {truth, score, std::nullopt}; }

std::vector<TextPair> distinct_identity_corpus() {
  return {{"the mouth region shows visible blur", {"the mouth region shows visible blur"}},
          {"eyes appear natural across all frames", {"eyes appear natural across all frames"}},
          {"edge artifacts run along the jaw line", {"edge artifacts run along the jaw line"}}};
}

}  // namespace

// ---- detection ----

TEST(AccuracyF1, AllCorrect) {
  const std::vector<DetectionRecord> r{rec(Label::Fake, 0.9), rec(Label::Real, 0.1), rec(Label::Fake, 0.5)};
  const auto s = accuracy_f1(r);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.f1, 1.0);
}

TEST(AccuracyF1, HandConfusionMatrix) {
  // TP=2, FP=1, FN=1, TN=1
  const std::vector<DetectionRecord> r{rec(Label::Fake, 0.9), rec(Label::Fake, 0.8), rec(Label::Real, 0.7),
                                       rec(Label::Fake, 0.2), rec(Label::Real, 0.1)};
  const auto s = accuracy_f1(r);
  EXPECT_EQ(s.counts.tp, 2u);
  EXPECT_EQ(s.counts.fp, 1u);
  EXPECT_EQ(s.counts.fn, 1u);
  EXPECT_EQ(s.counts.tn, 1u);
  EXPECT_NEAR(s.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.recall, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1, 0.6667, 1e-4);
  EXPECT_NEAR(s.accuracy, 0.6, 1e-12);
}

TEST(AccuracyF1, NoPositivesGivesZeroF1) {
  const std::vector<DetectionRecord> r{rec(Label::Real, 0.1), rec(Label::Real, 0.2)};
  const auto s = accuracy_f1(r);
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_EQ(s.accuracy, 1.0);
}

TEST(AccuracyF1, Empty) { EXPECT_EQ(kind_of([] { accuracy_f1({}); }), ErrorKind::EmptyInput); }

TEST(AccuracyF1, MatchesConfusionOracle) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<DetectionRecord> r(1 + rng() % 50);
    int tp = 0, fp = 0, fn = 0, tn = 0;
    for (auto& x : r) {
      x = rec(rng() % 2 ? Label::Fake : Label::Real, std::round(u(rng) * 10) / 10);
      const bool pf = x.score >= 0.5, tf = x.truth == Label::Fake;
      tp += pf && tf, fp += pf && !tf, fn += !pf && tf, tn += !pf && !tf;
    }
    const auto s = accuracy_f1(r);
    ASSERT_EQ(s.accuracy, static_cast<double>(tp + tn) / static_cast<double>(r.size()));
    const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    ASSERT_NEAR(s.f1, f1, 1e-12);
  }
}

TEST(Auc, Examples) {
  EXPECT_EQ(auc(std::vector{rec(Label::Fake, 0.9), rec(Label::Real, 0.1)}), 1.0);
  EXPECT_EQ(auc(std::vector{rec(Label::Fake, 0.4), rec(Label::Real, 0.4), rec(Label::Fake, 0.4)}), 0.5);
  EXPECT_EQ(auc(std::vector{rec(Label::Fake, 0.9), rec(Label::Fake, 0.6), rec(Label::Real, 0.7),
                            rec(Label::Real, 0.2)}),
            0.75);
}

TEST(Auc, SingleClass) {
  EXPECT_EQ(kind_of([] { auc(std::vector{rec(Label::Real, 0.2)}); }), ErrorKind::DegenerateClasses);
}

TEST(Auc, MatchesPairEnumeration) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> grid(0, 20);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<DetectionRecord> r(2 + rng() % 199);
    r[0].truth = Label::Fake;
    r[1].truth = Label::Real;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 1) r[i].truth = rng() % 2 ? Label::Fake : Label::Real;
      r[i].score = grid(rng) / 20.0;  // coarse grid forces ties
    }
    ASSERT_EQ(auc(r), oracle::auc_pairs(r));
  }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  std::mt19937 rng(98);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<DetectionRecord> r(10 + rng() % 40);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rec(i % 2 ? Label::Fake : Label::Real, u(rng));
    auto t = r;
    for (auto& x : t) x.score = x.score * x.score * x.score;
    ASSERT_EQ(auc(r), auc(t));
  }
}

// ---- text ----

TEST(Tokenize, LowercaseAlnumRuns) {
  EXPECT_EQ(tokenize("Delta_blur rises, at (3,4)!"),
            (std::vector<std::string>{"delta", "blur", "rises", "at", "3", "4"}));
  EXPECT_TRUE(tokenize(" ,.; ").empty());
}

TEST(Bleu4, Examples) {
  EXPECT_NEAR(bleu4({"the face is real", {"the face is real"}}), 1.0, 1e-9);
  EXPECT_LE(bleu4({"alpha beta gamma delta", {"one two three four"}}), 1e-2);
  EXPECT_NEAR(bleu4({"a b c d", {"a b c d e"}}), std::exp(-0.25), 1e-12);
  EXPECT_NEAR(bleu4({"a b c d", {"a b c d e"}}), 0.7788, 1e-4);
  EXPECT_EQ(kind_of([] { bleu4({"!!", {"x"}}); }), ErrorKind::EmptyInput);
}

TEST(Bleu4, PicksClosestReferenceLength) {
  // References of length 3 and 6 for a 5-token candidate: r = 6, BP = e^{1-6/5}.
  const double v = bleu4({"a b c d e", {"a b c", "a b c d e f"}});
  EXPECT_NEAR(v, std::exp(1.0 - 6.0 / 5.0), 1e-12);
}

TEST(RougeL, Examples) {
  EXPECT_NEAR(rouge_l({"same words here", {"same words here"}}), 1.0, 1e-12);
  EXPECT_EQ(rouge_l({"a b", {"c d"}}), 0.0);
  // LCS 2, P = 2/3, R = 1 with beta 1.2 gives 2.44 * (2/3) / (1 + 1.44 * 2/3).
  EXPECT_NEAR(rouge_l({"a b c", {"a c"}}), 0.829931972789, 1e-12);
}

TEST(MeteorExact, Examples) {
  EXPECT_NEAR(meteor_exact({"a b c d", {"a b c d"}}), 1.0 - 0.5 / 64.0, 1e-12);
  EXPECT_EQ(meteor_exact({"a b", {"c d"}}), 0.0);
  // One shared word: P = R = 1/2, F_mean = 1/2, penalty 1/2.
  EXPECT_NEAR(meteor_exact({"a x", {"a y"}}), 0.25, 1e-12);
  // Five matches in two chunks: F_mean = 5/6, penalty 0.5 * (2/5)^3.
  EXPECT_NEAR(meteor_exact({"the cat sat on the mat", {"the cat sat on a mat"}}),
              5.0 / 6.0 * (1.0 - 0.5 * 0.064), 1e-12);
}

TEST(Cider, IdentityWithDistinctReferences) {
  const auto corpus = distinct_identity_corpus();
  EXPECT_NEAR(cider(corpus), 10.0, 1e-6);
}

TEST(Cider, FrozenSmallCorpus) {
  const std::vector<TextPair> corpus{{"the mouth region shows blur", {"the mouth region shows strong blur"}},
                                     {"eyes look natural and stable", {"the eyes look natural"}},
                                     {"edge artifacts near the jaw", {"lighting is inconsistent near the jaw line"}}};
  // Independent scalar evaluation of the stated formula.
  EXPECT_NEAR(cider(corpus), 2.700767954897, 1e-9);
}

TEST(Cider, DisjointAndTooSmall) {
  const std::vector<TextPair> corpus{{"a b c d", {"e f g h"}}, {"i j k l", {"m n o p"}}, {"q r s t", {"u v w x"}}};
  EXPECT_EQ(cider(corpus), 0.0);
  EXPECT_EQ(kind_of([] { cider(std::vector<TextPair>{{"a", {"a"}}}); }), ErrorKind::CorpusTooSmall);
}

TEST(Css, Examples) {
  const std::vector<double> a{1, 2, 3}, x{1, 0}, y{0, 1}, z{1, 1};
  EXPECT_NEAR(css(a, a), 1.0, 1e-12);
  EXPECT_EQ(css(x, y), 0.0);
  EXPECT_NEAR(css(x, z), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(kind_of([&] { css(x, a); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { css(std::vector<double>{0, 0}, x); }), ErrorKind::ZeroVector);
}

TEST(TextMetrics, WhitespaceInsensitive) {
  const TextPair a{"the  face\tlooks   real", {"the face looks real today"}};
  const TextPair b{"the face looks real", {"the face looks real today"}};
  EXPECT_EQ(bleu4(a), bleu4(b));
  EXPECT_EQ(rouge_l(a), rouge_l(b));
  EXPECT_EQ(meteor_exact(a), meteor_exact(b));
}

TEST(TextMetrics, IdentityOnRandomSentences) {
  std::mt19937 rng(4);
  const char* words[] = {"blur", "edge", "mouth", "eyes", "nose", "colour", "shift", "frame", "jaw", "skin"};
  for (int i = 0; i < 200; ++i) {
    std::string s;
    const int n = 4 + static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) s += std::string(k ? " " : "") + words[rng() % 10];
    const TextPair p{s, {s}};
    ASSERT_NEAR(bleu4(p), 1.0, 1e-9);
    ASSERT_NEAR(rouge_l(p), 1.0, 1e-9);
  }
}

// ---- report ----

TEST(Evaluate, PerfectPredictions) {
  const auto rows = parse_eval_rows(
      "{\"truth\":\"fake\",\"score\":0.9,\"candidate\":\"blur at the mouth\",\"references\":[\"blur at the mouth\"]}\n"
      "{\"truth\":\"real\",\"score\":0.1,\"candidate\":\"eyes stay stable and natural\",\"references\":[\"eyes stay stable and natural\"]}\n"
      "\n"
      "{\"truth\":\"fake\",\"score\":0.7,\"candidate\":\"edges flicker on jaw\",\"references\":[\"edges flicker on jaw\"],"
      "\"embedding_candidate\":[1,2],\"embedding_reference\":[1,2]}\n");
  ASSERT_EQ(rows.size(), 3u);
  const EvalReport r = evaluate(rows);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.auc_value, 1.0);
  EXPECT_NEAR(*r.bleu4_value, 1.0, 1e-9);
  EXPECT_NEAR(*r.rouge_l_value, 1.0, 1e-9);
  EXPECT_NEAR(*r.css_value, 1.0, 1e-9);
  EXPECT_NEAR(*r.cider_value, 10.0, 1e-6);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("counts").at("records"), 3);
  EXPECT_FALSE(j.at("notes").empty());
  EXPECT_NE(j.at("notes")[0].get<std::string>().find("METEOR"), std::string::npos);
}

TEST(Evaluate, InputErrors) {
  EXPECT_EQ(kind_of([] { evaluate({}); }), ErrorKind::EmptyInput);
  EXPECT_EQ(kind_of([] { parse_eval_rows("{\"truth\":\"fake\"}\n"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { parse_eval_rows("{\"truth\":\"maybe\",\"score\":0.1}\n"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { parse_eval_rows("{\"truth\":\"fake\",\"score\":1.5}\n"); }), ErrorKind::RangeError);
  try {
    parse_eval_rows("{\"truth\":\"fake\",\"score\":0.5}\n{oops\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}
