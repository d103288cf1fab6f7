#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modeldiff/data.hpp"

namespace modeldiff {

// Minimum leaf size, either an absolute row count or a fraction of the
// training rows (resolved by rounding up).
class MinSamplesLeaf {
 public:
  static MinSamplesLeaf count(std::size_t n);
  static MinSamplesLeaf fraction(double f);
  // Values >= 1 must be integers and mean a count; values in (0, 1) are
  // fractions. Accepts "1", "0.001", "1%" (percent sign divides by 100).
  static MinSamplesLeaf parse(const std::string& text);

  bool is_fraction() const { return is_fraction_; }
  double value() const { return value_; }
  // Throws std::invalid_argument when the result is zero or exceeds n.
  std::size_t resolve(std::size_t n) const;
  // "1 sample", "25 samples", "0.1%".
  std::string label() const;

  bool operator==(const MinSamplesLeaf&) const = default;

 private:
  MinSamplesLeaf(bool is_fraction, double value) : is_fraction_(is_fraction), value_(value) {}
  bool is_fraction_ = false;
  double value_ = 1.0;
};

struct TreeParams {
  MinSamplesLeaf min_samples_leaf = MinSamplesLeaf::count(1);
  std::optional<std::size_t> max_depth;
  // Features examined per split; unset means all.
  std::optional<std::size_t> features_per_split;
  bool bootstrap = false;
  std::uint64_t seed = 0;
};

class CartTree {
 public:
  static constexpr std::int32_t kNone = -1;

  struct Node {
    // Internal nodes: feature >= 0, children set. Leaves: feature == kNone.
    std::int32_t feature = kNone;
    double threshold = 0.0;
    std::int32_t left = kNone;
    std::int32_t right = kNone;
    std::array<std::size_t, 2> class_counts{0, 0};
    int predicted_class = 0;

    bool is_leaf() const { return feature == kNone; }
    std::size_t sample_count() const { return class_counts[0] + class_counts[1]; }
    bool operator==(const Node&) const = default;
  };

  CartTree() = default;
  // Validates structure: children in range, acyclic from root 0, leaf classes
  // consistent with counts. Throws std::invalid_argument otherwise.
  CartTree(std::size_t num_features, std::vector<Node> nodes);

  std::size_t num_features() const { return num_features_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& root() const { return nodes_.front(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  // Index of the leaf reached by `row`: left iff value <= threshold.
  std::size_t leaf_index(std::span<const double> row) const;
  int predict_row(std::span<const double> row) const;

  bool operator==(const CartTree&) const = default;

 private:
  std::size_t num_features_ = 0;
  std::vector<Node> nodes_;
};

// Greedy Gini CART. Split candidates are midpoints of consecutive distinct
// values; equal-score candidates go to the lowest feature index, then the
// lowest threshold. Splits with zero impurity decrease are accepted, so a
// node stays a leaf only when it is pure, too small for two leaves of the
// resolved minimum size, at max depth, or constant on every examined feature.
CartTree fit_cart(const FeatureMatrix& x, std::span<const int> y, const TreeParams& params);
// Uses x.labels().
CartTree fit_cart(const FeatureMatrix& x, const TreeParams& params);

Labels predict_tree(const CartTree& tree, const FeatureMatrix& x);

// Leaf class: argmax of counts, ties to class 0.
constexpr int majority_class(std::size_t zeros, std::size_t ones) { return ones > zeros ? 1 : 0; }

}  // namespace modeldiff
