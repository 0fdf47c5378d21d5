#include "fef/objectives.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fef/error.hpp"

namespace fef {

namespace {

void check_distribution(const EvidenceDistribution& d, const char* name) {
  double sum = 0.0;
  for (const auto& [key, mass] : d) {
    if (!(mass >= 0.0) || !std::isfinite(mass)) {
      throw Error(ErrorKind::DomainError, std::string(name) + "[" + key + "] is not a valid probability");
    }
    sum += mass;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::DomainError, std::string(name) + " does not sum to 1");
  }
}

}  // namespace

double rationale_nll(std::span<const double> token_probs) {
  if (token_probs.empty()) throw Error(ErrorKind::DomainError, "rationale has no tokens");
  double loss = 0.0;
  for (double p : token_probs) {
    if (!(p > 0.0) || p > 1.0) throw Error(ErrorKind::DomainError, "token probability outside (0, 1]");
    loss -= std::log(p);
  }
  return loss;
}

double answer_nll(double p_true) {
  if (!(p_true > 0.0) || p_true > 1.0) throw Error(ErrorKind::DomainError, "label probability outside (0, 1]");
  return -std::log(p_true);
}

double evidence_kl(const EvidenceDistribution& p, const EvidenceDistribution& q) {
  check_distribution(p, "p");
  check_distribution(q, "q");
  if (p.size() != q.size()) throw Error(ErrorKind::DomainError, "distributions cover different keys");
  double kl = 0.0;
  for (const auto& [key, pe] : p) {
    auto it = q.find(key);
    if (it == q.end()) throw Error(ErrorKind::DomainError, "key " + key + " missing from q");
    if (pe == 0.0) continue;
    if (it->second == 0.0) throw Error(ErrorKind::DivergentSupport, "q[" + key + "] = 0 where p > 0");
    kl += pe * std::log(pe / it->second);
  }
  // Rounding can leave a tiny negative residue for p ~= q.
  return kl < 0.0 ? 0.0 : kl;
}

double composite_loss(double rationale_loss, double answer_loss, double consistency_loss,
                      const LossWeights& weights) {
  if (weights.rationale < 0.0 || weights.answer < 0.0 || weights.consistency < 0.0) {
    throw Error(ErrorKind::DomainError, "loss weights must be non-negative");
  }
  // Smallest terms first keeps decimal weights like 0.8/1/0.1 summing to the
  // nearest double of their decimal total.
  std::array<double, 3> terms{weights.rationale * rationale_loss, weights.answer * answer_loss,
                              weights.consistency * consistency_loss};
  std::sort(terms.begin(), terms.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  return (terms[0] + terms[1]) + terms[2];
}

}  // namespace fef
