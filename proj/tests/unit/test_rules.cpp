#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "modeldiff/delta.hpp"
#include "modeldiff/rules.hpp"

using namespace modeldiff;

namespace {

DomainBounds domain_of(std::vector<double> lo, std::vector<double> hi) {
  DomainBounds d;
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

// Scaled Δ-tree with its domain and rules, fitted on random data.
struct Fitted {
  FeatureMatrix x;
  CartTree tree;
  DomainBounds domain;
  RuleSet rules;
};

Fitted fit_random(std::uint64_t seed, std::size_t rows = 300, std::size_t min_leaf = 1) {
  auto x = testing::random_matrix(rows, 3, seed, true, seed % 2 ? 6 : 0);
  auto tree = fit_delta_tree(x, MinSamplesLeaf::count(min_leaf));
  auto unlabeled = x.without_labels();
  auto domain = compute_domain(unlabeled);
  auto rules = extract_rules(tree, domain, unlabeled.feature_names()).with_coverage(unlabeled);
  return {unlabeled, tree, domain, rules};
}

// Node depth of every leaf, by walking from the root.
std::vector<std::size_t> leaf_depths(const CartTree& t) {
  std::vector<std::size_t> depth(t.nodes().size(), 0);
  for (std::size_t i = 0; i < t.nodes().size(); ++i) {
    const auto& n = t.nodes()[i];
    if (n.is_leaf()) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
  }
  return depth;
}

}  // namespace

TEST_SUITE("rules") {

TEST_CASE("merging: the worked example with a closed lower test") {
  auto domain = domain_of({0}, {100});
  std::vector<Condition> path{{0, Comparison::Greater, 10},
                              {0, Comparison::GreaterEqual, 30},
                              {0, Comparison::LessEqual, 50}};
  auto r = merge_conditions(path, domain);
  CHECK(r.intervals[0] == Interval({30, true}, {50, true}));
  CHECK(r.length() == 1);
}

TEST_CASE("merging: strict tests give a lower-open interval") {
  auto domain = domain_of({0}, {100});
  std::vector<Condition> path{{0, Comparison::Greater, 10},
                              {0, Comparison::Greater, 30},
                              {0, Comparison::LessEqual, 50}};
  auto r = merge_conditions(path, domain);
  CHECK(r.intervals[0].lower() == Bound{30, false});
  CHECK(r.intervals[0].upper() == Bound{50, true});
  CHECK_FALSE(r.intervals[0].contains(30));
  CHECK(r.intervals[0].contains(50));
}

TEST_CASE("merging: defaults, two features, empty intervals") {
  auto domain = domain_of({0, -5}, {100, 5});
  std::vector<Condition> one{{0, Comparison::LessEqual, 7}};
  auto r = merge_conditions(one, domain, 12);
  CHECK(r.intervals[0] == Interval::closed(0, 7));
  CHECK(r.intervals[1] == Interval::closed(-5, 5));
  CHECK(r.length() == 1);
  CHECK(r.support == 12);

  std::vector<Condition> two{{1, Comparison::Greater, 0}, {0, Comparison::LessEqual, 7}};
  auto r2 = merge_conditions(two, domain);
  CHECK(r2.length() == 2);
  CHECK(r2.feature_order == std::vector<std::size_t>{1, 0});

  std::vector<Condition> empty{{0, Comparison::Greater, 50}, {0, Comparison::LessEqual, 20}};
  CHECK_THROWS_AS(merge_conditions(empty, domain), std::invalid_argument);

  // A test that does not narrow the domain does not count towards length.
  std::vector<Condition> wide{{0, Comparison::LessEqual, 100}};
  CHECK(merge_conditions(wide, domain).length() == 0);
}

TEST_CASE("extraction: all-zero tree and a depth-1 tree") {
  using Node = CartTree::Node;
  auto domain = domain_of({-1}, {1});
  CartTree zero(1, {Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {3, 0}, 0}});
  CHECK(extract_rules(zero, domain, {"A"}).empty());

  CartTree stump(1, {Node{0, 0.3, 1, 2, {2, 2}, 0},
                     Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {2, 0}, 0},
                     Node{CartTree::kNone, 0, CartTree::kNone, CartTree::kNone, {0, 2}, 1}});
  auto rs = extract_rules(stump, domain, {"A"});
  REQUIRE(rs.size() == 1);
  CHECK(rs.rules()[0].intervals[0] == Interval({0.3, false}, {1, true}));
  CHECK(rs.rules()[0].length() == 1);
  CHECK(rs.rules()[0].support == 2);
}

TEST_CASE("extraction equivalence, non-overlap and structural properties") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto f = fit_random(seed, 300, 1 + seed % 6);
    CHECK(predict_rules(f.rules, f.x) == predict_tree(f.tree, f.x));
    CHECK(pairwise_disjoint(f.rules));
    CHECK(overlap_count(f.rules, f.x) == 0);

    std::size_t class1_leaves = 0, covered = 0;
    for (const auto& n : f.tree.nodes()) class1_leaves += n.is_leaf() && n.predicted_class == 1;
    CHECK(f.rules.size() == class1_leaves);
    const auto depths = leaf_depths(f.tree);
    for (const auto& r : f.rules.rules()) {
      covered += *r.covered_rows;
      CHECK(r.support >= 1 + seed % 6);
    }
    CHECK(covered <= f.x.rows());

    // Each rule covers exactly the rows routed to one class-1 leaf, and no
    // two rules share a leaf.
    std::set<std::size_t> used;
    for (const auto& rule : f.rules.rules()) {
      std::optional<std::size_t> leaf;
      for (std::size_t i = 0; i < f.x.rows(); ++i) {
        if (rule.covers(f.x.row(i))) {
          leaf = f.tree.leaf_index(f.x.row(i));
          break;
        }
      }
      REQUIRE(leaf.has_value());
      CHECK(f.tree.nodes()[*leaf].predicted_class == 1);
      CHECK(used.insert(*leaf).second);
      CHECK(rule.length() <= depths[*leaf]);
      for (std::size_t i = 0; i < f.x.rows(); ++i) {
        CHECK(rule.covers(f.x.row(i)) == (f.tree.leaf_index(f.x.row(i)) == *leaf));
      }
    }
  }
}

TEST_CASE("coverage is a row-by-row predicate count") {
  auto f = fit_random(3, 250);
  for (const auto& r : f.rules.rules()) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
      bool in = true;
      for (std::size_t j = 0; j < f.x.cols(); ++j) in = in && r.intervals[j].contains(f.x.at(i, j));
      n += in;
    }
    CHECK(covered_count(r, f.x) == n);
    CHECK(rule_coverage(r, f.x) == doctest::Approx(static_cast<double>(n) / 250.0));
  }
  Rule full = merge_conditions({}, f.domain);
  CHECK(rule_coverage(full, f.x) == 1.0);
}

TEST_CASE("overlap counts pairwise joint coverage") {
  auto domain = domain_of({0}, {10});
  FeatureMatrix x({"a"}, {1, 2, 3, 4, 5});
  Rule a = merge_conditions(std::vector<Condition>{{0, Comparison::LessEqual, 3}}, domain);
  Rule b = merge_conditions(std::vector<Condition>{{0, Comparison::GreaterEqual, 2}}, domain);
  Rule c = merge_conditions(std::vector<Condition>{{0, Comparison::GreaterEqual, 3}}, domain);
  RuleSet rs({"a"}, domain, {a, b, c});
  // Rows 2 and 3 are in a and b; rows 3, 4, 5 in b and c; row 3 also in a and c.
  CHECK(overlap_count(rs, x) == 2 + 3 + 1);
  CHECK_FALSE(pairwise_disjoint(rs));
}

TEST_CASE("denormalization") {
  auto f = fit_random(5, 200);
  auto id = Scaler::identity(f.x.feature_names());
  auto same = denormalize(f.rules, id);
  for (std::size_t i = 0; i < same.size(); ++i) {
    CHECK(same.rules()[i].intervals == f.rules.rules()[i].intervals);
    CHECK(same.rules()[i].support == f.rules.rules()[i].support);
  }

  Scaler salary({{"salary", 100000.0, 30000.0, false}});
  auto domain = domain_of({-2}, {4});
  Rule r = merge_conditions(std::vector<Condition>{{0, Comparison::Greater, 2.36}}, domain);
  RuleSet rs({"salary"}, domain, {r});
  auto orig = denormalize(rs, salary);
  CHECK(orig.rules()[0].intervals[0].lower().value == doctest::Approx(170800.0));
  CHECK(orig.domain().hi[0] == doctest::Approx(220000.0));

  // Coverage is unchanged when the data is transformed alongside.
  Scaler s({{"x0", 3.0, 2.0, false}, {"x1", -1.0, 0.5, false}, {"x2", 10.0, 4.0, false}});
  auto back = s.inverse_transform(f.x);
  auto mapped = denormalize(f.rules, s);
  for (std::size_t i = 0; i < f.rules.size(); ++i) {
    CHECK(covered_count(mapped.rules()[i], back) == covered_count(f.rules.rules()[i], f.x));
  }
}

TEST_CASE("rendering the published rules") {
  std::vector<std::string> names{"salary", "education level", "age"};
  auto domain = domain_of({20000, 0, 20}, {250000, 12, 140});
  auto r1 = merge_conditions(std::vector<Condition>{{0, Comparison::Greater, 170824.88},
                                                    {1, Comparison::Greater, 9.17},
                                                    {2, Comparison::LessEqual, 129.62}},
                             domain, 199);
  auto r3 = merge_conditions(std::vector<Condition>{{0, Comparison::Greater, 170824.88},
                                                    {1, Comparison::Greater, 7.17},
                                                    {1, Comparison::LessEqual, 9.17},
                                                    {2, Comparison::LessEqual, 109.62}},
                             domain, 158);
  r1.covered_rows = 199;
  r3.covered_rows = 158;
  RuleSet rs(names, domain, {r1, r3});
  CHECK(render_rule(r1, rs, 10000) ==
        "(salary > 170824.88) and (education level > 9.17) and (age ≤ 129.62) "
        "(199 samples, coverage 2%)");
  CHECK(render_rule(r3, rs, 10000) ==
        "(salary > 170824.88) and (education level ∈ [7.17, 9.17]) and (age ≤ 109.62) "
        "(158 samples, coverage 1.6%)");
  const auto text = render_text(rs, 10000);
  CHECK(text.rfind("R1: (salary", 0) == 0);
  CHECK(text.find("\nR2: ") != std::string::npos);
  CHECK(render_text(RuleSet(names, domain, {}), 10) == "no disagreement regions found\n");
}

TEST_CASE("JSON export carries both unit systems") {
  Scaler salary({{"salary", 100000.0, 30000.0, false}});
  auto domain = domain_of({-2}, {4});
  Rule r = merge_conditions(std::vector<Condition>{{0, Comparison::Greater, 2.36}}, domain, 40);
  r.covered_rows = 50;
  RuleSet rs({"salary"}, domain, {r});
  auto doc = nlohmann::json::parse(rules_to_json(rs, salary, 1000));
  CHECK(doc["schema"] == "modeldiff.rules/v1");
  CHECK(doc["total_rows"] == 1000);
  const auto& rule = doc["rules"][0];
  CHECK(rule["id"] == "R1");
  CHECK(rule["support"] == 40);
  CHECK(rule["length"] == 1);
  CHECK(rule["covered_rows"] == 50);
  CHECK(rule["coverage"].get<double>() == doctest::Approx(0.05));
  const auto& c = rule["conditions"][0];
  CHECK(c["feature"] == "salary");
  CHECK(c["scaled"]["lower"].get<double>() == doctest::Approx(2.36));
  CHECK(c["scaled"]["lower_closed"] == false);
  CHECK(c["original"]["lower"].get<double>() == doctest::Approx(170800.0));
  CHECK(c["original"]["upper_closed"] == true);
  CHECK(doc["domain"][0]["original"]["hi"].get<double>() == doctest::Approx(220000.0));
}

}  // TEST_SUITE
