#pragma once

#include <map>
#include <span>
#include <string>

namespace fef {

// Probability mass over evidence keys.
using EvidenceDistribution = std::map<std::string, double>;

struct LossWeights {
  double rationale = 0.8;    // lambda1
  double answer = 1.0;       // lambda2
  double consistency = 0.1;  // lambda3
};

// -sum ln p over the ground-truth token probabilities.
double rationale_nll(std::span<const double> token_probs);

// -ln p of the true label.
double answer_nll(double p_true);

// KL(p || q) in nats with 0 ln 0 = 0. Both maps must cover the same keys.
double evidence_kl(const EvidenceDistribution& p, const EvidenceDistribution& q);

double composite_loss(double rationale_loss, double answer_loss, double consistency_loss,
                      const LossWeights& weights = {});

}  // namespace fef
