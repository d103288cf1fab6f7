#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "modeldiff/forest.hpp"
#include "modeldiff/tree.hpp"

using namespace modeldiff;

namespace {

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

double gini(double a, double b) {
  const double n = a + b;
  if (n == 0) return 0.0;
  return 1.0 - (a / n) * (a / n) - (b / n) * (b / n);
}

// Exhaustive search over all midpoints of all features, weighted Gini.
Split brute_force_best_split(const FeatureMatrix& x, const Labels& y, std::size_t min_leaf) {
  Split best;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto values = x.column(j);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = (values[k] + values[k + 1]) / 2.0;
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if (x.at(i, j) <= t) {
          (y[i] ? l1 : l0) += 1;
        } else {
          (y[i] ? r1 : r0) += 1;
        }
      }
      if (l0 + l1 < min_leaf || r0 + r1 < min_leaf) continue;
      const double n = static_cast<double>(x.rows());
      const double imp = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / n;
      if (imp < best.impurity - 1e-12) best = {j, t, imp};
    }
  }
  return best;
}

double split_impurity(const FeatureMatrix& x, const Labels& y, std::size_t j, double t) {
  double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (x.at(i, j) <= t) {
      (y[i] ? l1 : l0) += 1;
    } else {
      (y[i] ? r1 : r0) += 1;
    }
  }
  return ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / static_cast<double>(x.rows());
}

// Leaf reached by enumerating every root-to-leaf path as a box and finding
// the one box that holds the row.
int path_oracle_predict(const CartTree& tree, std::span<const double> row) {
  struct Box {
    std::vector<double> lo, hi;  // (lo, hi]
  };
  int found = -1;
  int matches = 0;
  const std::size_t d = tree.num_features();
  std::vector<std::pair<std::int32_t, Box>> stack;
  stack.push_back({0, Box{std::vector<double>(d, -INFINITY), std::vector<double>(d, INFINITY)}});
  while (!stack.empty()) {
    auto [id, box] = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes()[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      bool inside = true;
      for (std::size_t j = 0; j < d; ++j) inside = inside && row[j] > box.lo[j] && row[j] <= box.hi[j];
      if (inside) {
        ++matches;
        found = node.predicted_class;
      }
      continue;
    }
    const auto f = static_cast<std::size_t>(node.feature);
    Box left = box, right = box;
    left.hi[f] = std::min(left.hi[f], node.threshold);
    right.lo[f] = std::max(right.lo[f], node.threshold);
    stack.push_back({node.left, left});
    stack.push_back({node.right, right});
  }
  REQUIRE(matches == 1);
  return found;
}

std::size_t leaf_depth_max(const CartTree& t) { return t.depth(); }

}  // namespace

TEST_SUITE("tree") {

TEST_CASE("min samples leaf parsing and resolution") {
  CHECK(MinSamplesLeaf::parse("1") == MinSamplesLeaf::count(1));
  CHECK(MinSamplesLeaf::parse("0.001") == MinSamplesLeaf::fraction(0.001));
  CHECK(MinSamplesLeaf::parse("1%") == MinSamplesLeaf::fraction(0.01));
  CHECK(MinSamplesLeaf::parse("2.5%") == MinSamplesLeaf::fraction(0.025));
  CHECK(MinSamplesLeaf::fraction(0.01).resolve(7000) == 70);
  CHECK(MinSamplesLeaf::fraction(0.001).resolve(7000) == 7);
  CHECK(MinSamplesLeaf::fraction(0.001).resolve(6999) == 7);  // rounded up
  CHECK(MinSamplesLeaf::fraction(0.001).resolve(10) == 1);
  CHECK(MinSamplesLeaf::count(1).label() == "1 sample");
  CHECK(MinSamplesLeaf::count(5).label() == "5 samples");
  CHECK(MinSamplesLeaf::fraction(0.001).label() == "0.1%");
  CHECK(MinSamplesLeaf::fraction(0.025).label() == "2.5%");
  CHECK(MinSamplesLeaf::fraction(0.25).label() == "25%");
  CHECK_THROWS(MinSamplesLeaf::parse("0"));
  CHECK_THROWS(MinSamplesLeaf::parse("1.5"));
  CHECK_THROWS(MinSamplesLeaf::parse("abc"));
  CHECK_THROWS(MinSamplesLeaf::count(11).resolve(10));
}

TEST_CASE("pure data gives a single class-0 leaf") {
  FeatureMatrix x({"a"}, {1, 2, 3, 4}, Labels{0, 0, 0, 0});
  auto t = fit_cart(x, TreeParams{});
  CHECK(t.nodes().size() == 1);
  CHECK(t.root().predicted_class == 0);
}

TEST_CASE("1-D step function: one split near 0.5, perfect fit") {
  std::vector<double> v(100);
  Labels y(100);
  for (std::size_t i = 0; i < 100; ++i) {
    v[i] = (static_cast<double>(i) + 0.5) / 100.0;
    y[i] = v[i] > 0.5 ? 1 : 0;
  }
  FeatureMatrix x({"x"}, v, y);
  auto t = fit_cart(x, TreeParams{});
  REQUIRE(t.nodes().size() == 3);
  auto oracle = brute_force_best_split(x, y, 1);
  CHECK(t.root().feature == 0);
  CHECK(t.root().threshold == doctest::Approx(oracle.threshold));
  CHECK(t.root().threshold == doctest::Approx(0.5));
  CHECK(predict_tree(t, x) == y);
}

TEST_CASE("root split matches the brute-force oracle on random data") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t min_leaf = 1 + seed % 4;
    auto x = testing::random_matrix(40, 3, seed, true, seed % 2 ? 6 : 0);
    const auto& y = x.labels();
    TreeParams p;
    p.min_samples_leaf = MinSamplesLeaf::count(min_leaf);
    auto t = fit_cart(x, p);
    auto oracle = brute_force_best_split(x, y, min_leaf);
    if (!std::isfinite(oracle.impurity)) {
      CHECK(t.nodes().size() == 1);
      continue;
    }
    REQUIRE_FALSE(t.root().is_leaf());
    // The chosen split is optimal; among optimal splits the lowest feature,
    // then the lowest threshold, wins.
    const auto f = static_cast<std::size_t>(t.root().feature);
    CHECK(split_impurity(x, y, f, t.root().threshold) == doctest::Approx(oracle.impurity));
    CHECK(f == oracle.feature);
    CHECK(t.root().threshold == doctest::Approx(oracle.threshold));
  }
}

TEST_CASE("leaf floor equal to n forbids any split") {
  auto x = testing::random_matrix(25, 2, 3);
  TreeParams p;
  p.min_samples_leaf = MinSamplesLeaf::count(25);
  auto t = fit_cart(x, p);
  CHECK(t.nodes().size() == 1);
  const auto ones = static_cast<std::size_t>(std::count(x.labels().begin(), x.labels().end(), 1));
  CHECK(t.root().predicted_class == majority_class(25 - ones, ones));
}

TEST_CASE("leaf invariants hold on random data and settings") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto x = testing::random_matrix(150, 4, seed, true, seed % 3 == 0 ? 4 : 0);
    TreeParams p;
    const std::size_t floor = 1 + seed % 9;
    p.min_samples_leaf = MinSamplesLeaf::count(floor);
    auto t = fit_cart(x, p);
    std::size_t total = 0;
    for (const auto& n : t.nodes()) {
      if (!n.is_leaf()) continue;
      CHECK(n.sample_count() >= floor);
      CHECK(n.predicted_class == majority_class(n.class_counts[0], n.class_counts[1]));
      total += n.sample_count();
    }
    CHECK(total == x.rows());
    // Training rows land in leaves whose counts include them.
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto& leaf = t.nodes()[t.leaf_index(x.row(i))];
      CHECK(leaf.class_counts[static_cast<std::size_t>(x.labels()[i])] > 0);
    }
  }
}

TEST_CASE("majority ties go to class 0") {
  CHECK(majority_class(3, 3) == 0);
  CHECK(majority_class(2, 3) == 1);
  FeatureMatrix x({"a"}, {1, 1}, Labels{0, 1});
  auto t = fit_cart(x, TreeParams{});
  CHECK(t.nodes().size() == 1);
  CHECK(t.root().predicted_class == 0);
}

TEST_CASE("routing on a hand-built tree") {
  using Node = CartTree::Node;
  std::vector<Node> nodes(3);
  nodes[0] = Node{1, 0.5, 1, 2, {2, 2}, 0};
  nodes[1] = Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {2, 0}, 0};
  nodes[2] = Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {0, 2}, 1};
  CartTree t(2, nodes);
  CHECK(t.predict_row(std::vector<double>{9.0, 0.5}) == 0);  // equal goes left
  CHECK(t.predict_row(std::vector<double>{9.0, 0.51}) == 1);
  CHECK(t.predict_row(std::vector<double>{-9.0, -3.0}) == 0);
  CartTree leaf(2, {Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {0, 4}, 1}});
  CHECK(leaf.predict_row(std::vector<double>{1, 2}) == 1);
  CHECK(leaf.predict_row(std::vector<double>{-1e9, 1e9}) == 1);
  // A leaf whose class contradicts its counts is rejected.
  CHECK_THROWS(CartTree(1, {Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {4, 0}, 1}}));
  // Child index out of range.
  CHECK_THROWS(CartTree(1, {Node{0, 0.0, 1, 5, {1, 1}, 0},
                            Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {1, 0}, 0}}));
}

TEST_CASE("prediction agrees with a path-enumeration oracle") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto x = testing::random_matrix(120, 3, seed, true, seed % 2 ? 5 : 0);
    TreeParams p;
    p.min_samples_leaf = MinSamplesLeaf::count(1 + seed % 5);
    auto t = fit_cart(x, p);
    auto probe = testing::random_matrix(200, 3, seed + 1000, false, seed % 2 ? 5 : 0);
    for (std::size_t i = 0; i < probe.rows(); ++i) {
      CHECK(t.predict_row(probe.row(i)) == path_oracle_predict(t, probe.row(i)));
    }
  }
}

TEST_CASE("perfect fit with one sample per leaf, including XOR labels") {
  FeatureMatrix xor_data({"a", "b"}, {0, 0, 0, 1, 1, 0, 1, 1}, Labels{0, 1, 1, 0});
  CHECK(predict_tree(fit_cart(xor_data, TreeParams{}), xor_data) == xor_data.labels());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // Distinct rows, arbitrary labels: consistent, so a pure fit exists.
    auto x = testing::random_matrix(300, 3, seed);
    auto t = fit_cart(x, TreeParams{});
    CHECK(predict_tree(t, x) == x.labels());
    CHECK(leaf_depth_max(t) >= 1);
  }
}

TEST_CASE("max depth caps growth") {
  auto x = testing::random_matrix(200, 3, 5);
  TreeParams p;
  p.max_depth = 2;
  CHECK(fit_cart(x, p).depth() <= 2);
}

TEST_CASE("seeded fits are bit-reproducible") {
  auto x = testing::random_matrix(200, 5, 6);
  TreeParams p;
  p.bootstrap = true;
  p.features_per_split = 2;
  p.seed = 77;
  CHECK(serialize(fit_cart(x, p)) == serialize(fit_cart(x, p)));
  p.seed = 78;
  auto other = fit_cart(x, p);
  p.seed = 77;
  CHECK_FALSE(serialize(other) == serialize(fit_cart(x, p)));
}

}  // TEST_SUITE
