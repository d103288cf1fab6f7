#include "modeldiff/rules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "text_util.hpp"

namespace modeldiff {

Interval::Interval(Bound lower, Bound upper) : lower_(lower), upper_(upper) {
  const bool ok = lower_.value < upper_.value ||
                  (lower_.value == upper_.value && lower_.closed && upper_.closed);
  if (!ok) {
    throw std::invalid_argument("empty interval " + std::string(lower_.closed ? "[" : "(") +
                                detail::format_exact(lower_.value) + ", " +
                                detail::format_exact(upper_.value) + (upper_.closed ? "]" : ")"));
  }
}

bool Interval::contains(double v) const {
  const bool above = lower_.closed ? v >= lower_.value : v > lower_.value;
  const bool below = upper_.closed ? v <= upper_.value : v < upper_.value;
  return above && below;
}

bool Interval::disjoint(const Interval& other) const {
  auto ends_before = [](const Bound& upper, const Bound& lower) {
    return upper.value < lower.value ||
           (upper.value == lower.value && !(upper.closed && lower.closed));
  };
  return ends_before(upper_, other.lower_) || ends_before(other.upper_, lower_);
}

bool Rule::covers(std::span<const double> row) const {
  for (std::size_t j = 0; j < intervals.size(); ++j) {
    if (!intervals[j].contains(row[j])) return false;
  }
  return true;
}

Rule merge_conditions(std::span<const Condition> path, const DomainBounds& domain,
                      std::size_t support) {
  const std::size_t d = domain.size();
  std::vector<Bound> lower(d), upper(d);
  for (std::size_t j = 0; j < d; ++j) {
    lower[j] = {domain.lo[j], true};
    upper[j] = {domain.hi[j], true};
  }
  std::vector<std::size_t> seen;
  for (const auto& c : path) {
    if (c.feature >= d) throw std::out_of_range("condition feature outside the domain");
    if (!std::isfinite(c.threshold)) throw std::invalid_argument("non-finite threshold");
    if (std::find(seen.begin(), seen.end(), c.feature) == seen.end()) seen.push_back(c.feature);
    const bool strict = c.op == Comparison::Less || c.op == Comparison::Greater;
    const Bound b{c.threshold, !strict};
    if (c.op == Comparison::Greater || c.op == Comparison::GreaterEqual) {
      auto& lo = lower[c.feature];
      if (b.value > lo.value || (b.value == lo.value && !b.closed)) lo = b;
    } else {
      auto& hi = upper[c.feature];
      if (b.value < hi.value || (b.value == hi.value && !b.closed)) hi = b;
    }
  }

  Rule rule;
  rule.support = support;
  rule.intervals.reserve(d);
  for (std::size_t j = 0; j < d; ++j) rule.intervals.emplace_back(lower[j], upper[j]);
  for (auto j : seen) {
    if (rule.intervals[j] != Interval::closed(domain.lo[j], domain.hi[j])) {
      rule.feature_order.push_back(j);
    }
  }
  return rule;
}

// ---------------------------------------------------------------------------
// RuleSet

RuleSet::RuleSet(std::vector<std::string> feature_names, DomainBounds domain,
                 std::vector<Rule> rules)
    : names_(std::move(feature_names)), domain_(std::move(domain)), rules_(std::move(rules)) {
  if (names_.size() != domain_.size()) {
    throw std::invalid_argument("rule set feature names and domain differ in size");
  }
  for (const auto& r : rules_) {
    if (r.intervals.size() != names_.size()) {
      throw std::invalid_argument("rule has the wrong number of intervals");
    }
  }
}

int RuleSet::predict_row(std::span<const double> row) const {
  for (const auto& r : rules_)
    if (r.covers(row)) return 1;
  return 0;
}

RuleSet RuleSet::with_coverage(const FeatureMatrix& x) const {
  std::vector<Rule> rules = rules_;
  for (auto& r : rules) r.covered_rows = covered_count(r, x);
  return RuleSet(names_, domain_, std::move(rules));
}

RuleSet extract_rules(const CartTree& delta_tree, const DomainBounds& domain,
                      std::vector<std::string> feature_names) {
  if (delta_tree.num_features() != domain.size()) {
    throw std::invalid_argument("tree and domain differ in feature count");
  }
  std::vector<Rule> rules;
  std::vector<Condition> path;
  const auto& nodes = delta_tree.nodes();

  // Depth-first, left before right, so rules follow leaf order.
  struct Frame {
    std::int32_t node;
    std::size_t depth;
    std::optional<Condition> via;
  };
  std::vector<Frame> stack{{0, 0, std::nullopt}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    path.resize(f.depth > 0 ? f.depth - 1 : 0);
    if (f.via) path.push_back(*f.via);
    const auto& node = nodes[static_cast<std::size_t>(f.node)];
    if (node.is_leaf()) {
      if (node.predicted_class == 1) rules.push_back(merge_conditions(path, domain, node.sample_count()));
      continue;
    }
    const auto j = static_cast<std::size_t>(node.feature);
    stack.push_back({node.right, f.depth + 1, Condition{j, Comparison::Greater, node.threshold}});
    stack.push_back({node.left, f.depth + 1, Condition{j, Comparison::LessEqual, node.threshold}});
  }
  return RuleSet(std::move(feature_names), domain, std::move(rules));
}

Labels predict_rules(const RuleSet& rules, const FeatureMatrix& x) {
  if (x.cols() != rules.feature_names().size()) {
    throw std::invalid_argument("rule set and matrix differ in feature count");
  }
  Labels out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = rules.predict_row(x.row(r));
  return out;
}

std::size_t covered_count(const Rule& rule, const FeatureMatrix& x) {
  if (x.cols() != rule.intervals.size()) {
    throw std::invalid_argument("rule and matrix differ in feature count");
  }
  std::size_t n = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) n += rule.covers(x.row(r)) ? 1 : 0;
  return n;
}

double rule_coverage(const Rule& rule, const FeatureMatrix& x) {
  return static_cast<double>(covered_count(rule, x)) / static_cast<double>(x.rows());
}

bool pairwise_disjoint(const RuleSet& rules) {
  const auto& rs = rules.rules();
  for (std::size_t a = 0; a < rs.size(); ++a) {
    for (std::size_t b = a + 1; b < rs.size(); ++b) {
      bool separated = false;
      for (std::size_t j = 0; j < rs[a].intervals.size() && !separated; ++j) {
        separated = rs[a].intervals[j].disjoint(rs[b].intervals[j]);
      }
      if (!separated) return false;
    }
  }
  return true;
}

std::size_t overlap_count(const RuleSet& rules, const FeatureMatrix& x) {
  std::size_t total = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::size_t hits = 0;
    for (const auto& rule : rules.rules()) hits += rule.covers(x.row(r)) ? 1 : 0;
    if (hits > 1) total += hits * (hits - 1) / 2;
  }
  return total;
}

RuleSet denormalize(const RuleSet& rules, const Scaler& scaler) {
  const auto& names = rules.feature_names();
  std::vector<std::size_t> entry(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto idx = scaler.index_of(names[j]);
    if (!idx) throw std::invalid_argument("scaler has no feature '" + names[j] + "'");
    if (scaler.entries()[*idx].dropped) {
      throw std::invalid_argument("feature '" + names[j] + "' was dropped by the scaler");
    }
    entry[j] = *idx;
  }
  auto map = [&](std::size_t j, double v) { return inverse_transform_threshold(scaler, entry[j], v); };

  DomainBounds domain;
  for (std::size_t j = 0; j < names.size(); ++j) {
    domain.lo.push_back(map(j, rules.domain().lo[j]));
    domain.hi.push_back(map(j, rules.domain().hi[j]));
  }
  std::vector<Rule> out;
  out.reserve(rules.size());
  for (const auto& r : rules.rules()) {
    Rule m = r;
    m.intervals.clear();
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& iv = r.intervals[j];
      m.intervals.emplace_back(Bound{map(j, iv.lower().value), iv.lower().closed},
                               Bound{map(j, iv.upper().value), iv.upper().closed});
    }
    out.push_back(std::move(m));
  }
  return RuleSet(names, std::move(domain), std::move(out));
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string percent_one_decimal(double fraction) {
  std::string s = detail::format_fixed(fraction * 100.0, 1);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s + "%";
}

std::string render_condition(const std::string& name, const Interval& iv, double lo, double hi) {
  const bool has_lower = !(iv.lower().closed && iv.lower().value == lo);
  const bool has_upper = !(iv.upper().closed && iv.upper().value == hi);
  const auto a = detail::format_fixed(iv.lower().value, 2);
  const auto b = detail::format_fixed(iv.upper().value, 2);
  if (has_lower && has_upper) return "(" + name + " ∈ [" + a + ", " + b + "])";
  if (has_lower) return "(" + name + (iv.lower().closed ? " ≥ " : " > ") + a + ")";
  return "(" + name + (iv.upper().closed ? " ≤ " : " < ") + b + ")";
}

}  // namespace

std::string render_rule(const Rule& rule, const RuleSet& context, std::size_t total_rows) {
  std::string out;
  for (auto j : rule.feature_order) {
    if (!out.empty()) out += " and ";
    out += render_condition(context.feature_names()[j], rule.intervals[j], context.domain().lo[j],
                            context.domain().hi[j]);
  }
  if (out.empty()) out = "(any input)";
  const std::size_t covered = rule.covered_rows.value_or(rule.support);
  const double fraction =
      total_rows == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total_rows);
  out += " (" + std::to_string(rule.support) + (rule.support == 1 ? " sample" : " samples") +
         ", coverage " + percent_one_decimal(fraction) + ")";
  return out;
}

std::string render_text(const RuleSet& rules, std::size_t total_rows) {
  if (rules.empty()) return "no disagreement regions found\n";
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    out += "R" + std::to_string(i + 1) + ": " + render_rule(rules.rules()[i], rules, total_rows) + "\n";
  }
  return out;
}

std::string rules_to_json(const RuleSet& scaled, const Scaler& scaler, std::size_t total_rows) {
  using nlohmann::json;
  const RuleSet original = denormalize(scaled, scaler);
  auto bounds = [](const Interval& iv) {
    return json{{"lower", iv.lower().value},
                {"lower_closed", iv.lower().closed},
                {"upper", iv.upper().value},
                {"upper_closed", iv.upper().closed}};
  };

  json doc;
  doc["schema"] = "modeldiff.rules/v1";
  doc["total_rows"] = total_rows;
  doc["features"] = scaled.feature_names();
  json domain = json::array();
  for (std::size_t j = 0; j < scaled.feature_names().size(); ++j) {
    domain.push_back({{"feature", scaled.feature_names()[j]},
                      {"scaled", {{"lo", scaled.domain().lo[j]}, {"hi", scaled.domain().hi[j]}}},
                      {"original",
                       {{"lo", original.domain().lo[j]}, {"hi", original.domain().hi[j]}}}});
  }
  doc["domain"] = domain;

  json rules = json::array();
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    const auto& rs = scaled.rules()[i];
    const auto& ro = original.rules()[i];
    json conditions = json::array();
    for (auto j : rs.feature_order) {
      conditions.push_back({{"feature", scaled.feature_names()[j]},
                            {"index", j},
                            {"scaled", bounds(rs.intervals[j])},
                            {"original", bounds(ro.intervals[j])}});
    }
    json rule{{"id", "R" + std::to_string(i + 1)},
              {"support", rs.support},
              {"length", rs.length()},
              {"conditions", conditions},
              {"text", render_rule(ro, original, total_rows)}};
    if (rs.covered_rows) {
      rule["covered_rows"] = *rs.covered_rows;
      rule["coverage"] =
          total_rows ? static_cast<double>(*rs.covered_rows) / static_cast<double>(total_rows) : 0.0;
    } else {
      rule["covered_rows"] = nullptr;
      rule["coverage"] = nullptr;
    }
    rules.push_back(std::move(rule));
  }
  doc["rules"] = rules;
  return doc.dump(2) + "\n";
}

}  // namespace modeldiff
