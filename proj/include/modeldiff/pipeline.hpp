#pragma once

#include <cstdint>
#include <optional>

#include "modeldiff/data.hpp"
#include "modeldiff/delta.hpp"
#include "modeldiff/metrics.hpp"
#include "modeldiff/rules.hpp"
#include "modeldiff/tree.hpp"

namespace modeldiff {

// Which row count a fractional min-samples setting is resolved against.
enum class MinSamplesBasis { DeltaTrain, DeltaFull };

struct ExplainOptions {
  double test_fraction = 0.3;
  MinSamplesBasis basis = MinSamplesBasis::DeltaTrain;
};

// Everything produced by explaining one Δ-dataset at one min-samples setting.
struct Explanation {
  TrainTestIndices split;
  std::size_t resolved_min_samples = 0;
  CartTree tree;
  // Bounds of the whole Δ-dataset; rule intervals default to these.
  DomainBounds domain;
  // Standardized units, with coverage measured on the whole Δ-dataset.
  RuleSet rules;
  // Rule-set predictions on the held-out rows; absent when no rule exists.
  std::optional<FidelityReport> fidelity;
  InterpretabilityReport interpretability;
  // Rule-set and tree predictions matched on every Δ row.
  bool extraction_equivalent = false;
  // Mean of support / training rows over rules.
  std::optional<double> mean_train_coverage;
  std::size_t overlap = 0;
  std::size_t min_support = 0;
};

// Stratified train/test split of the Δ-dataset, Δ-tree fit on the training
// part, rule extraction, and both metric families.
Explanation explain_delta(const DeltaDataset& delta, MinSamplesLeaf min_samples,
                          const ExplainOptions& options, std::uint64_t seed);

}  // namespace modeldiff
