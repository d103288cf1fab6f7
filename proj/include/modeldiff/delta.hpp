#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "modeldiff/data.hpp"
#include "modeldiff/forest.hpp"
#include "modeldiff/tree.hpp"

namespace modeldiff {

// Elementwise disagreement: 1 where the two prediction vectors differ.
Labels delta_labels(std::span<const int> pred_f, std::span<const int> pred_g);

enum class RowSource : std::uint8_t { FromF, FromG, Both };

// How X_f and X_g are combined. Set mode keeps one copy of each distinct row
// (first occurrence wins); multiset mode keeps every row of both inputs.
enum class UnionMode { Set, Multiset };

struct DeltaDataset {
  FeatureMatrix x;  // unlabeled
  Labels y;         // 1 = the models disagree on the row
  std::vector<RowSource> provenance;

  std::size_t rows() const { return x.rows(); }
  std::size_t disagreements() const;
  // x labeled with y.
  FeatureMatrix labeled() const { return x.with_labels(y); }
};

// Labels are computed once here and frozen; f and g are never queried again.
DeltaDataset build_delta_dataset(const FeatureMatrix& x_f, const FeatureMatrix& x_g,
                                 const Classifier& f, const Classifier& g,
                                 UnionMode mode = UnionMode::Set);

// Same construction for a single dataset scored externally by both models.
DeltaDataset delta_from_predictions(const FeatureMatrix& x, std::span<const int> pred_f,
                                    std::span<const int> pred_g, UnionMode mode = UnionMode::Set);

// Unlimited-depth CART on all features; fractions resolve against the rows of
// `train` (rounded up).
CartTree fit_delta_tree(const FeatureMatrix& train, std::span<const int> y_delta,
                        MinSamplesLeaf min_samples_leaf);
CartTree fit_delta_tree(const FeatureMatrix& labeled_train, MinSamplesLeaf min_samples_leaf);

// Features, then a y_delta column, then a source column (f, g or both).
void write_delta_csv(const std::filesystem::path& path, const DeltaDataset& delta);

}  // namespace modeldiff
