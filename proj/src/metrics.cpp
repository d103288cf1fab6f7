#include "modeldiff/metrics.hpp"

#include <stdexcept>
#include <string>

namespace modeldiff {

FidelityReport fidelity_metrics(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("predicted and actual labels differ in length (" +
                                std::to_string(predicted.size()) + " vs " +
                                std::to_string(actual.size()) + ")");
  }
  if (predicted.empty()) throw std::invalid_argument("fidelity needs at least one label");
  FidelityReport r;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int a = actual[i];
    if ((p != 0 && p != 1) || (a != 0 && a != 1)) {
      throw std::invalid_argument("fidelity labels must be 0 or 1");
    }
    if (p == 1 && a == 1) ++r.true_positive;
    if (p == 1 && a == 0) ++r.false_positive;
    if (p == 0 && a == 0) ++r.true_negative;
    if (p == 0 && a == 1) ++r.false_negative;
  }
  const auto tp = static_cast<double>(r.true_positive);
  r.accuracy = static_cast<double>(r.true_positive + r.true_negative) / static_cast<double>(r.total());
  if (const auto pos_pred = r.true_positive + r.false_positive; pos_pred > 0) {
    r.precision = tp / static_cast<double>(pos_pred);
  }
  if (const auto pos_true = r.true_positive + r.false_negative; pos_true > 0) {
    r.recall = tp / static_cast<double>(pos_true);
  }
  return r;
}

InterpretabilityReport interpretability_metrics(const RuleSet& rules, const FeatureMatrix& x_full) {
  InterpretabilityReport r;
  r.num_rules = rules.size();
  if (rules.empty()) return r;
  double length = 0.0;
  double coverage = 0.0;
  for (const auto& rule : rules.rules()) {
    length += static_cast<double>(rule.length());
    coverage += rule_coverage(rule, x_full);
  }
  const auto n = static_cast<double>(rules.size());
  r.mean_length = length / n;
  r.mean_coverage = coverage / n;
  return r;
}

}  // namespace modeldiff
