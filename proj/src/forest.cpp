#include "modeldiff/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "modeldiff/random.hpp"
#include "text_util.hpp"

namespace modeldiff {

RandomForestModel::RandomForestModel(std::vector<CartTree> trees) : trees_(std::move(trees)) {
  if (trees_.empty()) throw std::invalid_argument("forest needs at least one tree");
  for (const auto& t : trees_) {
    if (t.num_features() != trees_.front().num_features()) {
      throw std::invalid_argument("forest members disagree on feature count");
    }
  }
}

int RandomForestModel::predict_row(std::span<const double> row) const {
  std::size_t ones = 0;
  for (const auto& t : trees_) ones += static_cast<std::size_t>(t.predict_row(row));
  return majority_class(trees_.size() - ones, ones);
}

RandomForestModel fit_forest(const FeatureMatrix& x, std::span<const int> y,
                             const ForestParams& params, std::uint64_t seed) {
  if (params.n_estimators == 0) throw std::invalid_argument("forest needs n_estimators >= 1");
  TreeParams base = params.tree;
  if (!base.features_per_split) {
    base.features_per_split =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));
  }
  // Fails fast on bad input before any worker starts.
  base.min_samples_leaf.resolve(x.rows());

  std::vector<std::optional<CartTree>> trees(params.n_estimators);
  auto fit_one = [&](std::size_t i) {
    TreeParams p = base;
    p.seed = derive_seed(seed, i);
    trees[i] = fit_cart(x, y, p);
  };

  std::size_t jobs = params.jobs == 0 ? std::max(1U, std::thread::hardware_concurrency()) : params.jobs;
  jobs = std::min(jobs, params.n_estimators);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < params.n_estimators; ++i) fit_one(i);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> workers;
      for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < params.n_estimators; i += jobs) fit_one(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<CartTree> out;
  out.reserve(trees.size());
  for (auto& t : trees) out.push_back(std::move(*t));
  return RandomForestModel(std::move(out));
}

RandomForestModel fit_forest(const FeatureMatrix& x, const ForestParams& params,
                             std::uint64_t seed) {
  return fit_forest(x, x.labels(), params, seed);
}

Labels predict_forest(const RandomForestModel& forest, const FeatureMatrix& x) {
  if (x.cols() != forest.num_features()) {
    throw std::invalid_argument("forest expects " + std::to_string(forest.num_features()) +
                                " features, got " + std::to_string(x.cols()));
  }
  Labels out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = forest.predict_row(x.row(r));
  return out;
}

Classifier as_classifier(RandomForestModel forest) {
  return [f = std::move(forest)](const FeatureMatrix& x) { return predict_forest(f, x); };
}

Classifier as_classifier(CartTree tree) {
  return [t = std::move(tree)](const FeatureMatrix& x) { return predict_tree(t, x); };
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_tree(std::ostream& out, const CartTree& tree) {
  out << "modeldiff-tree v1\n";
  out << "features " << tree.num_features() << '\n';
  out << "nodes " << tree.nodes().size() << '\n';
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      out << "L " << n.predicted_class << ' ' << n.class_counts[0] << ' ' << n.class_counts[1]
          << '\n';
    } else {
      out << "I " << n.feature << ' ' << detail::format_exact(n.threshold) << ' ' << n.left << ' '
          << n.right << ' ' << n.class_counts[0] << ' ' << n.class_counts[1] << '\n';
    }
  }
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw ParseError("unexpected end of model text");
    return w;
  }
  void expect(const std::string& w) {
    auto got = word();
    if (got != w) throw ParseError("expected '" + w + "' in model text, found '" + got + "'");
  }
  long long integer() {
    auto w = word();
    auto v = detail::parse_int(w);
    if (!v) throw ParseError("expected integer in model text, found '" + w + "'");
    return *v;
  }
  std::size_t count() {
    auto v = integer();
    if (v < 0) throw ParseError("negative count in model text");
    return static_cast<std::size_t>(v);
  }
  double real() {
    auto w = word();
    auto v = detail::parse_double(w);
    if (!v) throw ParseError("expected number in model text, found '" + w + "'");
    return *v;
  }
  bool at_end() {
    in_ >> std::ws;
    return in_.eof();
  }

 private:
  std::istringstream in_;
};

CartTree read_tree(Reader& r) {
  r.expect("modeldiff-tree");
  r.expect("v1");
  r.expect("features");
  const auto d = r.count();
  r.expect("nodes");
  const auto n = r.count();
  std::vector<CartTree::Node> nodes(n);
  for (auto& node : nodes) {
    const auto kind = r.word();
    if (kind == "L") {
      node.predicted_class = static_cast<int>(r.integer());
      node.class_counts = {r.count(), r.count()};
    } else if (kind == "I") {
      node.feature = static_cast<std::int32_t>(r.integer());
      node.threshold = r.real();
      node.left = static_cast<std::int32_t>(r.integer());
      node.right = static_cast<std::int32_t>(r.integer());
      node.class_counts = {r.count(), r.count()};
      node.predicted_class = majority_class(node.class_counts[0], node.class_counts[1]);
    } else {
      throw ParseError("unknown node kind '" + kind + "'");
    }
  }
  return CartTree(d, std::move(nodes));
}

}  // namespace

std::string serialize(const CartTree& tree) {
  std::ostringstream out;
  write_tree(out, tree);
  return out.str();
}

std::string serialize(const RandomForestModel& forest) {
  std::ostringstream out;
  out << "modeldiff-forest v1\n";
  out << "trees " << forest.n_estimators() << '\n';
  for (const auto& t : forest.trees()) write_tree(out, t);
  return out.str();
}

CartTree parse_tree(const std::string& text) {
  Reader r(text);
  auto t = read_tree(r);
  if (!r.at_end()) throw ParseError("trailing content after tree");
  return t;
}

RandomForestModel parse_forest(const std::string& text) {
  Reader r(text);
  r.expect("modeldiff-forest");
  r.expect("v1");
  r.expect("trees");
  const auto n = r.count();
  std::vector<CartTree> trees;
  trees.reserve(n);
  for (std::size_t i = 0; i < n; ++i) trees.push_back(read_tree(r));
  if (!r.at_end()) throw ParseError("trailing content after forest");
  return RandomForestModel(std::move(trees));
}

void save_model(const std::filesystem::path& path, const RandomForestModel& forest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize(forest);
}

RandomForestModel load_forest(const std::filesystem::path& path) {
  return parse_forest(detail::read_file(path));
}

Labels predictions_from_file(const std::filesystem::path& path, std::size_t expected_rows) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Labels out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cell = detail::trim(line);
    if (cell.empty()) continue;
    auto v = detail::parse_int(cell);
    if (!v || (*v != 0 && *v != 1)) {
      throw ParseError("prediction '" + cell + "' at line " + std::to_string(lineno) +
                           " is not 0 or 1",
                       lineno, 1);
    }
    out.push_back(static_cast<int>(*v));
  }
  if (expected_rows != 0 && out.size() != expected_rows) {
    throw std::invalid_argument(path.string() + " holds " + std::to_string(out.size()) +
                                " predictions for " + std::to_string(expected_rows) + " rows");
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const Labels& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (int y : labels) out << y << '\n';
}

}  // namespace modeldiff
