#include "modeldiff/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "modeldiff/random.hpp"
#include "text_util.hpp"

namespace modeldiff {

// ---------------------------------------------------------------------------
// MinSamplesLeaf

MinSamplesLeaf MinSamplesLeaf::count(std::size_t n) {
  if (n == 0) throw std::invalid_argument("min_samples_leaf count must be >= 1");
  return MinSamplesLeaf(false, static_cast<double>(n));
}

MinSamplesLeaf MinSamplesLeaf::fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("min_samples_leaf fraction must be in (0, 1)");
  return MinSamplesLeaf(true, f);
}

MinSamplesLeaf MinSamplesLeaf::parse(const std::string& text) {
  std::string s = detail::trim(text);
  bool percent = false;
  if (!s.empty() && s.back() == '%') {
    percent = true;
    s.pop_back();
  }
  auto v = detail::parse_double(detail::trim(s));
  if (!v) throw std::invalid_argument("cannot parse min-samples value '" + text + "'");
  double value = percent ? *v / 100.0 : *v;
  if (value > 0.0 && value < 1.0) return fraction(value);
  if (value >= 1.0 && !percent && value == std::floor(value)) {
    return count(static_cast<std::size_t>(value));
  }
  throw std::invalid_argument("min-samples value '" + text +
                              "' is neither a fraction in (0,1) nor a positive integer");
}

std::size_t MinSamplesLeaf::resolve(std::size_t n) const {
  std::size_t k;
  if (is_fraction_) {
    // The small slack keeps products like 0.001 * 7000 from rounding up to 8.
    k = static_cast<std::size_t>(std::ceil(value_ * static_cast<double>(n) - 1e-9));
    k = std::max<std::size_t>(k, 1);
  } else {
    k = static_cast<std::size_t>(value_);
  }
  if (k > n) {
    throw std::invalid_argument("min_samples_leaf " + std::to_string(k) + " exceeds " +
                                std::to_string(n) + " training rows");
  }
  return k;
}

std::string MinSamplesLeaf::label() const {
  if (!is_fraction_) {
    const auto n = static_cast<std::size_t>(value_);
    return std::to_string(n) + (n == 1 ? " sample" : " samples");
  }
  // Fewest decimals that still denote the same percentage.
  const double percent = value_ * 100.0;
  std::string s;
  for (int digits = 0; digits <= 12; ++digits) {
    s = detail::format_fixed(percent, digits);
    if (std::abs(std::stod(s) - percent) < 1e-9 * std::max(1.0, percent)) break;
  }
  return s + "%";
}

// ---------------------------------------------------------------------------
// CartTree

CartTree::CartTree(std::size_t num_features, std::vector<Node> nodes)
    : num_features_(num_features), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("tree needs at least one node");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (node.left != kNone || node.right != kNone) {
        throw std::invalid_argument("leaf node with children");
      }
      if (node.predicted_class != 0 && node.predicted_class != 1) {
        throw std::invalid_argument("leaf class must be 0 or 1");
      }
      if (node.sample_count() > 0 &&
          node.predicted_class != majority_class(node.class_counts[0], node.class_counts[1])) {
        throw std::invalid_argument("leaf class disagrees with its class counts");
      }
      continue;
    }
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= num_features_) {
      throw std::invalid_argument("split feature out of range");
    }
    if (!std::isfinite(node.threshold)) throw std::invalid_argument("non-finite threshold");
    for (auto child : {node.left, node.right}) {
      if (child <= 0 || child >= n) throw std::invalid_argument("child index out of range");
      if (++parents[static_cast<std::size_t>(child)] > 1) {
        throw std::invalid_argument("node with more than one parent");
      }
    }
  }
  // Every non-root node has exactly one parent and nothing points at the
  // root, so the structure is a tree iff all nodes are reachable from it.
  std::vector<std::int32_t> stack{0};
  std::size_t reached = 0;
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    ++reached;
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.is_leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
    if (reached > nodes_.size()) throw std::invalid_argument("cycle in tree");
  }
  if (reached != nodes_.size()) throw std::invalid_argument("unreachable tree nodes");
}

std::size_t CartTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t CartTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      best = std::max(best, d);
    } else {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return best;
}

std::size_t CartTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return i;
}

int CartTree::predict_row(std::span<const double> row) const {
  return nodes_[leaf_index(row)].predicted_class;
}

Labels predict_tree(const CartTree& tree, const FeatureMatrix& x) {
  if (x.cols() != tree.num_features()) {
    throw std::invalid_argument("tree expects " + std::to_string(tree.num_features()) +
                                " features, got " + std::to_string(x.cols()));
  }
  Labels out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = tree.predict_row(x.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct Entry {
  double value;
  int label;
};

struct Split {
  bool found = false;
  double score = 0.0;  // sum over children of (c0^2 + c1^2) / n, larger is purer
  std::size_t feature = 0;
  double threshold = 0.0;

  bool worse_than(double s, std::size_t f, double t) const {
    if (!found) return true;
    if (s != score) return s > score;
    if (f != feature) return f < feature;
    return t < threshold;
  }
};

double midpoint(double a, double b) {
  double m = 0.5 * a + 0.5 * b;
  if (!(m < b)) m = a;
  if (m < a) m = a;
  return m;
}

class Builder {
 public:
  Builder(const FeatureMatrix& x, std::span<const int> y, const TreeParams& params)
      : x_(x), y_(y), params_(params), rng_(params.seed), d_(x.cols()) {
    const std::size_t n = x.rows();
    columns_.resize(n * d_);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d_; ++j) columns_[j * n + r] = x.at(r, j);

    samples_.resize(n);
    if (params.bootstrap) {
      for (auto& s : samples_) s = static_cast<std::uint32_t>(uniform_index(rng_, 0, n - 1));
    } else {
      std::iota(samples_.begin(), samples_.end(), 0U);
    }
    min_leaf_ = params.min_samples_leaf.resolve(n);
    per_split_ = params.features_per_split ? std::clamp<std::size_t>(*params.features_per_split, 1, d_)
                                           : d_;
    order_.resize(d_);
    buffer_.reserve(n);
  }

  CartTree build() {
    struct Task {
      std::size_t node, begin, end, depth;
    };
    nodes_.emplace_back();
    std::vector<Task> stack{{0, 0, samples_.size(), 0}};
    while (!stack.empty()) {
      Task t = stack.back();
      stack.pop_back();
      std::array<std::size_t, 2> counts{0, 0};
      for (std::size_t i = t.begin; i < t.end; ++i) ++counts[y_[samples_[i]]];
      nodes_[t.node].class_counts = counts;
      nodes_[t.node].predicted_class = majority_class(counts[0], counts[1]);

      const std::size_t size = t.end - t.begin;
      const bool pure = counts[0] == 0 || counts[1] == 0;
      const bool depth_capped = params_.max_depth && t.depth >= *params_.max_depth;
      if (pure || depth_capped || size < 2 * min_leaf_) continue;

      Split split = best_split(t.begin, t.end);
      if (!split.found) continue;

      const std::size_t n = x_.rows();
      const double* col = columns_.data() + split.feature * n;
      auto mid = std::partition(samples_.begin() + static_cast<long>(t.begin),
                                samples_.begin() + static_cast<long>(t.end),
                                [&](std::uint32_t s) { return col[s] <= split.threshold; });
      const auto cut = static_cast<std::size_t>(mid - samples_.begin());

      const auto left = nodes_.size();
      nodes_.emplace_back();
      nodes_.emplace_back();
      auto& node = nodes_[t.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = split.threshold;
      node.left = static_cast<std::int32_t>(left);
      node.right = static_cast<std::int32_t>(left + 1);
      stack.push_back({left + 1, cut, t.end, t.depth + 1});
      stack.push_back({left, t.begin, cut, t.depth + 1});
    }
    return CartTree(d_, std::move(nodes_));
  }

 private:
  Split best_split(std::size_t begin, std::size_t end) {
    std::iota(order_.begin(), order_.end(), 0);
    if (per_split_ < d_) shuffle(order_.begin(), order_.end(), rng_);

    const std::size_t n = x_.rows();
    const std::size_t size = end - begin;
    Split best;
    std::size_t examined = 0;
    for (std::size_t j : order_) {
      if (examined >= per_split_ && best.found) break;
      const double* col = columns_.data() + j * n;
      buffer_.clear();
      std::array<double, 2> total{0, 0};
      for (std::size_t i = begin; i < end; ++i) {
        const auto s = samples_[i];
        buffer_.push_back({col[s], y_[s]});
        total[static_cast<std::size_t>(y_[s])] += 1.0;
      }
      std::sort(buffer_.begin(), buffer_.end(),
                [](const Entry& a, const Entry& b) { return a.value < b.value; });
      if (buffer_.front().value == buffer_.back().value) continue;
      ++examined;

      std::array<double, 2> left{0, 0};
      for (std::size_t i = 0; i + 1 < size; ++i) {
        left[static_cast<std::size_t>(buffer_[i].label)] += 1.0;
        if (!(buffer_[i].value < buffer_[i + 1].value)) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = size - n_left;
        if (n_left < min_leaf_) continue;
        if (n_right < min_leaf_) break;
        const double r0 = total[0] - left[0];
        const double r1 = total[1] - left[1];
        const double score = (left[0] * left[0] + left[1] * left[1]) / static_cast<double>(n_left) +
                             (r0 * r0 + r1 * r1) / static_cast<double>(n_right);
        const double threshold = midpoint(buffer_[i].value, buffer_[i + 1].value);
        if (best.worse_than(score, j, threshold)) best = {true, score, j, threshold};
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  const TreeParams& params_;
  Rng rng_;
  std::size_t d_;
  std::size_t min_leaf_ = 1;
  std::size_t per_split_ = 1;
  std::vector<double> columns_;
  std::vector<std::uint32_t> samples_;
  std::vector<std::size_t> order_;
  std::vector<Entry> buffer_;
  std::vector<CartTree::Node> nodes_;
};

}  // namespace

CartTree fit_cart(const FeatureMatrix& x, std::span<const int> y, const TreeParams& params) {
  if (y.size() != x.rows()) {
    throw std::invalid_argument("label count " + std::to_string(y.size()) +
                                " does not match row count " + std::to_string(x.rows()));
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw std::invalid_argument("tree labels must be 0 or 1");
  }
  return Builder(x, y, params).build();
}

CartTree fit_cart(const FeatureMatrix& x, const TreeParams& params) {
  return fit_cart(x, x.labels(), params);
}

}  // namespace modeldiff
