#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "modeldiff/data.hpp"
#include "modeldiff/rules.hpp"

namespace modeldiff {

// Confusion-matrix scores with class 1 (disagreement) as the positive class.
// Precision is undefined without positive predictions, recall without
// positive ground truth; neither is ever reported as 0 by convention.
struct FidelityReport {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;

  std::size_t total() const {
    return true_positive + false_positive + true_negative + false_negative;
  }
  bool operator==(const FidelityReport&) const = default;
};

FidelityReport fidelity_metrics(std::span<const int> predicted, std::span<const int> actual);

struct InterpretabilityReport {
  std::size_t num_rules = 0;
  std::optional<double> mean_length;    // absent when there are no rules
  std::optional<double> mean_coverage;  // fraction of the whole dataset

  bool operator==(const InterpretabilityReport&) const = default;
};

// Coverage is measured by scanning x_full (training and test rows together).
InterpretabilityReport interpretability_metrics(const RuleSet& rules, const FeatureMatrix& x_full);

}  // namespace modeldiff
