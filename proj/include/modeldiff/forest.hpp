#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "modeldiff/data.hpp"
#include "modeldiff/tree.hpp"

namespace modeldiff {

class RandomForestModel {
 public:
  explicit RandomForestModel(std::vector<CartTree> trees);

  std::size_t n_estimators() const { return trees_.size(); }
  std::size_t num_features() const { return trees_.front().num_features(); }
  const std::vector<CartTree>& trees() const { return trees_; }

  // Majority vote over member trees; ties go to class 0.
  int predict_row(std::span<const double> row) const;

  bool operator==(const RandomForestModel&) const = default;

 private:
  std::vector<CartTree> trees_;
};

struct ForestParams {
  std::size_t n_estimators = 100;
  // Member tree settings. Unset features_per_split means floor(sqrt(d)).
  TreeParams tree{MinSamplesLeaf::count(1), std::nullopt, std::nullopt, true, 0};
  // Worker threads; 0 means hardware concurrency. Output does not depend on it.
  std::size_t jobs = 1;
};

// Tree i is fitted with seed derive_seed(seed, i), so the forest is identical
// for any thread count.
RandomForestModel fit_forest(const FeatureMatrix& x, std::span<const int> y,
                             const ForestParams& params, std::uint64_t seed);
RandomForestModel fit_forest(const FeatureMatrix& x, const ForestParams& params,
                             std::uint64_t seed);

Labels predict_forest(const RandomForestModel& forest, const FeatureMatrix& x);

// A black-box binary classifier: one 0/1 prediction per row.
using Classifier = std::function<Labels(const FeatureMatrix&)>;

Classifier as_classifier(RandomForestModel forest);
Classifier as_classifier(CartTree tree);

// Text model format (whitespace separated, one record per line):
//
//   modeldiff-tree v1
//   features <d>
//   nodes <count>
//   I <feature> <threshold> <left> <right> <count0> <count1>
//   L <class> <count0> <count1>
//
// A forest file starts with "modeldiff-forest v1", then "trees <count>",
// followed by that many tree blocks. Thresholds use the shortest decimal that
// round-trips, so a reload is bit-exact.
std::string serialize(const CartTree& tree);
std::string serialize(const RandomForestModel& forest);
CartTree parse_tree(const std::string& text);
RandomForestModel parse_forest(const std::string& text);

void save_model(const std::filesystem::path& path, const RandomForestModel& forest);
RandomForestModel load_forest(const std::filesystem::path& path);

// One integer (0 or 1) per line. expected_rows, when non-zero, must match.
Labels predictions_from_file(const std::filesystem::path& path, std::size_t expected_rows = 0);
void write_predictions(const std::filesystem::path& path, const Labels& labels);

}  // namespace modeldiff
