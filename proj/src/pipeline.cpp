#include "modeldiff/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace modeldiff {

Explanation explain_delta(const DeltaDataset& delta, MinSamplesLeaf min_samples,
                          const ExplainOptions& options, std::uint64_t seed) {
  const FeatureMatrix labeled = delta.labeled();
  TrainTestIndices split = train_test_indices(labeled, options.test_fraction, seed);
  if (split.train.empty() || split.test.empty()) {
    throw std::invalid_argument("Δ-dataset of " + std::to_string(delta.rows()) +
                                " rows is too small for a train/test split");
  }
  const FeatureMatrix train = labeled.select_rows(split.train);
  const FeatureMatrix test = labeled.select_rows(split.test);

  std::size_t resolved = options.basis == MinSamplesBasis::DeltaTrain
                             ? min_samples.resolve(train.rows())
                             : min_samples.resolve(labeled.rows());
  if (resolved > train.rows()) {
    throw std::invalid_argument("min_samples_leaf " + std::to_string(resolved) + " exceeds " +
                                std::to_string(train.rows()) + " Δ-training rows");
  }
  CartTree tree = fit_delta_tree(train, MinSamplesLeaf::count(resolved));

  DomainBounds domain = compute_domain(delta.x);
  RuleSet rules = extract_rules(tree, domain, delta.x.feature_names()).with_coverage(delta.x);

  const Labels rule_pred = predict_rules(rules, delta.x);
  const Labels tree_pred = predict_tree(tree, delta.x);
  const bool equivalent = rule_pred == tree_pred;

  std::optional<FidelityReport> fidelity;
  if (!rules.empty()) {
    Labels test_pred(split.test.size());
    for (std::size_t i = 0; i < split.test.size(); ++i) test_pred[i] = rule_pred[split.test[i]];
    fidelity = fidelity_metrics(test_pred, test.labels());
  }

  std::optional<double> train_cov;
  std::size_t min_support = 0;
  if (!rules.empty()) {
    double sum = 0.0;
    min_support = std::numeric_limits<std::size_t>::max();
    for (const auto& r : rules.rules()) {
      sum += static_cast<double>(r.support) / static_cast<double>(train.rows());
      min_support = std::min(min_support, r.support);
    }
    train_cov = sum / static_cast<double>(rules.size());
  }

  InterpretabilityReport interp = interpretability_metrics(rules, delta.x);
  const std::size_t overlap = overlap_count(rules, delta.x);
  return Explanation{std::move(split), resolved,  std::move(tree), std::move(domain),
                     std::move(rules), fidelity,  interp,          equivalent,
                     train_cov,        overlap,   min_support};
}

}  // namespace modeldiff
