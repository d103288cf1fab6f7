#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modeldiff/data.hpp"
#include "modeldiff/tree.hpp"

namespace modeldiff {

struct Bound {
  double value = 0.0;
  bool closed = true;

  bool operator==(const Bound&) const = default;
};

// Real interval with independent open/closed ends. Non-empty by construction.
class Interval {
 public:
  Interval(Bound lower, Bound upper);
  static Interval closed(double lo, double hi) { return Interval({lo, true}, {hi, true}); }

  const Bound& lower() const { return lower_; }
  const Bound& upper() const { return upper_; }
  bool contains(double v) const;
  bool disjoint(const Interval& other) const;

  bool operator==(const Interval&) const = default;

 private:
  Bound lower_;
  Bound upper_;
};

enum class Comparison { LessEqual, Less, Greater, GreaterEqual };

struct Condition {
  std::size_t feature = 0;
  Comparison op = Comparison::LessEqual;
  double threshold = 0.0;
};

// Conjunction of one interval per feature.
struct Rule {
  std::vector<Interval> intervals;
  // Constrained features, in the order they were first tested on the path.
  std::vector<std::size_t> feature_order;
  // Training rows that reached the rule's leaf.
  std::size_t support = 0;
  // Rows of the whole dataset the rule covers, once measured.
  std::optional<std::size_t> covered_rows;

  std::size_t length() const { return feature_order.size(); }
  bool covers(std::span<const double> row) const;
};

// Groups the path's tests by feature and intersects them: the lower bound is
// the tightest > / >= test, the upper bound the tightest <= / < test, and
// untested sides come from the domain. Throws std::invalid_argument when a
// feature's interval comes out empty.
Rule merge_conditions(std::span<const Condition> path, const DomainBounds& domain,
                      std::size_t support = 0);

class RuleSet {
 public:
  RuleSet(std::vector<std::string> feature_names, DomainBounds domain, std::vector<Rule> rules);

  const std::vector<std::string>& feature_names() const { return names_; }
  const DomainBounds& domain() const { return domain_; }
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  // 1 iff some rule covers the row.
  int predict_row(std::span<const double> row) const;

  // Copy with covered_rows filled in from a scan of `x`.
  RuleSet with_coverage(const FeatureMatrix& x) const;

 private:
  std::vector<std::string> names_;
  DomainBounds domain_;
  std::vector<Rule> rules_;
};

// One rule per class-1 leaf; support is the leaf's training count.
RuleSet extract_rules(const CartTree& delta_tree, const DomainBounds& domain,
                      std::vector<std::string> feature_names);

Labels predict_rules(const RuleSet& rules, const FeatureMatrix& x);

std::size_t covered_count(const Rule& rule, const FeatureMatrix& x);
double rule_coverage(const Rule& rule, const FeatureMatrix& x);

// True iff every pair of rules has a feature on which they are disjoint.
bool pairwise_disjoint(const RuleSet& rules);
// Sum over rule pairs of the rows of x both rules cover.
std::size_t overlap_count(const RuleSet& rules, const FeatureMatrix& x);

// Maps every bound (and the domain) to feature units with the scaler's
// inverse transform. Counts and lengths are unchanged.
RuleSet denormalize(const RuleSet& rules, const Scaler& scaler);

// "(salary > 170824.88) and (age <= 40.00) (199 samples, coverage 2%)".
// Bounds equal to the domain bound are omitted; two-sided conditions print as
// "feature ∈ [a, b]". Coverage is covered_rows / total_rows (support when
// coverage was never measured), rounded to one decimal.
std::string render_rule(const Rule& rule, const RuleSet& context, std::size_t total_rows);
// One "R<i>: ..." line per rule, or "no disagreement regions found".
std::string render_text(const RuleSet& rules, std::size_t total_rows);

// Rule export document, described in the README. `scaled` is the rule set in
// standardized units; the scaler supplies the feature-unit bounds.
std::string rules_to_json(const RuleSet& scaled, const Scaler& scaler, std::size_t total_rows);

}  // namespace modeldiff
