#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "error_kind.hpp"
#include "fef/objectives.hpp"

using namespace fef;

namespace {

EvidenceDistribution random_distribution(std::mt19937& rng, int k, bool allow_zero) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (auto& x : w) {
    x = u(rng);
    if (allow_zero && u(rng) < 0.2) x = 0.0;
    sum += x;
  }
  if (sum == 0.0) {
    w[0] = 1.0;
    sum = 1.0;
  }
  EvidenceDistribution d;
  double acc = 0.0;
  for (int i = 0; i + 1 < k; ++i) {
    d["e" + std::to_string(i)] = w[static_cast<std::size_t>(i)] / sum;
    acc += w[static_cast<std::size_t>(i)] / sum;
  }
  d["e" + std::to_string(k - 1)] = std::max(0.0, 1.0 - acc);
  return d;
}

}  // namespace

TEST(RationaleNll, Examples) {
  const double ones[] = {1.0, 1.0, 1.0};
  EXPECT_EQ(rationale_nll(ones), 0.0);
  const double halves[] = {0.5, 0.5};
  EXPECT_NEAR(rationale_nll(halves), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(rationale_nll(halves), 1.386294, 1e-6);
  const double with_zero[] = {0.5, 0.0};
  EXPECT_EQ(kind_of([&] { rationale_nll(with_zero); }), ErrorKind::DomainError);
  const double above_one[] = {1.5};
  EXPECT_EQ(kind_of([&] { rationale_nll(above_one); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { rationale_nll({}); }), ErrorKind::DomainError);
}

TEST(AnswerNll, Examples) {
  EXPECT_EQ(answer_nll(1.0), 0.0);
  EXPECT_NEAR(answer_nll(0.5), 0.693147, 1e-6);
  EXPECT_EQ(kind_of([] { answer_nll(0.0); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { answer_nll(-0.1); }), ErrorKind::DomainError);
}

TEST(EvidenceKl, Examples) {
  const EvidenceDistribution p{{"a", 0.3}, {"b", 0.7}};
  EXPECT_EQ(evidence_kl(p, p), 0.0);
  EXPECT_NEAR(evidence_kl({{"a", 1.0}, {"b", 0.0}}, {{"a", 0.5}, {"b", 0.5}}), std::log(2.0), 1e-12);
  EXPECT_EQ(kind_of([] { evidence_kl({{"a", 1.0}, {"b", 0.0}}, {{"a", 0.0}, {"b", 1.0}}); }),
            ErrorKind::DivergentSupport);
}

TEST(EvidenceKl, RejectsMismatchedKeysAndBadMass) {
  EXPECT_EQ(kind_of([] { evidence_kl({{"a", 1.0}}, {{"b", 1.0}}); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { evidence_kl({{"a", 0.5}}, {{"a", 0.5}}); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { evidence_kl({{"a", 1.5}, {"b", -0.5}}, {{"a", 0.5}, {"b", 0.5}}); }),
            ErrorKind::DomainError);
}

TEST(EvidenceKl, NonNegativeAndZeroOnlyWhenEqual) {
  std::mt19937 rng(77);
  for (int i = 0; i < 1000; ++i) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const EvidenceDistribution p = random_distribution(rng, k, true);
    const EvidenceDistribution q = random_distribution(rng, k, false);
    const double d = evidence_kl(p, q);
    ASSERT_GE(d, 0.0);
    ASSERT_EQ(evidence_kl(p, p), 0.0);
    if (p != q) {
      ASSERT_GT(d, 1e-12);
    }
  }
}

TEST(CompositeLoss, Examples) {
  EXPECT_EQ(composite_loss(0, 0, 0), 0.0);
  // Left to right, 0.8 + 1 + 0.1 would give 1.9000000000000001.
  EXPECT_EQ(composite_loss(1, 1, 1, {0.8, 1.0, 0.1}), 1.9);
  EXPECT_EQ(composite_loss(1, 1, 1), 1.9);
}

TEST(CompositeLoss, Linear) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const LossWeights w{u(rng), u(rng), u(rng)};
    ASSERT_NEAR(composite_loss(2 * a, 2 * b, 2 * c, w), 2 * composite_loss(a, b, c, w), 1e-9);
    ASSERT_GE(composite_loss(a, b, c, w), 0.0);
  }
}

TEST(CompositeLoss, NegativeWeightRejected) {
  EXPECT_EQ(kind_of([] { composite_loss(1, 1, 1, {-0.1, 1, 1}); }), ErrorKind::DomainError);
}
