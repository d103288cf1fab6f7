#include "modeldiff/delta.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "text_util.hpp"

namespace modeldiff {

Labels delta_labels(std::span<const int> pred_f, std::span<const int> pred_g) {
  if (pred_f.size() != pred_g.size()) {
    throw std::invalid_argument("prediction vectors differ in length (" +
                                std::to_string(pred_f.size()) + " vs " +
                                std::to_string(pred_g.size()) + ")");
  }
  Labels out(pred_f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pred_f[i] != pred_g[i] ? 1 : 0;
  return out;
}

std::size_t DeltaDataset::disagreements() const {
  std::size_t n = 0;
  for (int v : y) n += static_cast<std::size_t>(v);
  return n;
}

namespace {

// Byte key of a row, with -0.0 folded into +0.0 so equal rows hash equal.
std::string row_key(std::span<const double> row) {
  std::string key(row.size() * sizeof(double), '\0');
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double v = row[j] + 0.0;
    std::memcpy(key.data() + j * sizeof(double), &v, sizeof(double));
  }
  return key;
}

struct UnionResult {
  std::vector<std::size_t> rows;  // indices into the concatenation
  std::vector<RowSource> provenance;
};

UnionResult union_rows(const FeatureMatrix& all, std::size_t f_rows, UnionMode mode) {
  UnionResult out;
  if (mode == UnionMode::Multiset) {
    for (std::size_t r = 0; r < all.rows(); ++r) {
      out.rows.push_back(r);
      out.provenance.push_back(r < f_rows ? RowSource::FromF : RowSource::FromG);
    }
    return out;
  }
  std::unordered_map<std::string, std::size_t> seen;
  seen.reserve(all.rows());
  for (std::size_t r = 0; r < all.rows(); ++r) {
    const RowSource src = r < f_rows ? RowSource::FromF : RowSource::FromG;
    auto [it, inserted] = seen.try_emplace(row_key(all.row(r)), out.rows.size());
    if (inserted) {
      out.rows.push_back(r);
      out.provenance.push_back(src);
    } else if (out.provenance[it->second] != src) {
      out.provenance[it->second] = RowSource::Both;
    }
  }
  return out;
}

}  // namespace

DeltaDataset build_delta_dataset(const FeatureMatrix& x_f, const FeatureMatrix& x_g,
                                 const Classifier& f, const Classifier& g, UnionMode mode) {
  if (x_f.feature_names() != x_g.feature_names()) {
    throw std::invalid_argument("X_f and X_g have different feature spaces");
  }
  const FeatureMatrix all = concat_rows(x_f.without_labels(), x_g.without_labels());
  auto u = union_rows(all, x_f.rows(), mode);
  FeatureMatrix x = all.select_rows(u.rows);
  const Labels pf = f(x);
  const Labels pg = g(x);
  if (pf.size() != x.rows() || pg.size() != x.rows()) {
    throw std::runtime_error("classifier returned the wrong number of predictions");
  }
  Labels y = delta_labels(pf, pg);
  return {std::move(x), std::move(y), std::move(u.provenance)};
}

DeltaDataset delta_from_predictions(const FeatureMatrix& x, std::span<const int> pred_f,
                                    std::span<const int> pred_g, UnionMode mode) {
  if (pred_f.size() != x.rows() || pred_g.size() != x.rows()) {
    throw std::invalid_argument("predictions must have one entry per dataset row (" +
                                std::to_string(x.rows()) + ")");
  }
  const Labels all_y = delta_labels(pred_f, pred_g);
  const FeatureMatrix unlabeled = x.without_labels();
  auto u = union_rows(unlabeled, x.rows(), mode);
  Labels y;
  y.reserve(u.rows.size());
  for (auto r : u.rows) y.push_back(all_y[r]);
  std::vector<RowSource> prov(u.rows.size(), RowSource::Both);
  return {unlabeled.select_rows(u.rows), std::move(y), std::move(prov)};
}

CartTree fit_delta_tree(const FeatureMatrix& train, std::span<const int> y_delta,
                        MinSamplesLeaf min_samples_leaf) {
  TreeParams p;
  p.min_samples_leaf = min_samples_leaf;
  return fit_cart(train, y_delta, p);
}

CartTree fit_delta_tree(const FeatureMatrix& labeled_train, MinSamplesLeaf min_samples_leaf) {
  return fit_delta_tree(labeled_train, labeled_train.labels(), min_samples_leaf);
}

void write_delta_csv(const std::filesystem::path& path, const DeltaDataset& delta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& name : delta.x.feature_names()) out << name << ',';
  out << "y_delta,source\n";
  for (std::size_t r = 0; r < delta.rows(); ++r) {
    for (double v : delta.x.row(r)) out << detail::format_exact(v) << ',';
    out << delta.y[r] << ',';
    switch (delta.provenance[r]) {
      case RowSource::FromF:
        out << "f";
        break;
      case RowSource::FromG:
        out << "g";
        break;
      case RowSource::Both:
        out << "both";
        break;
    }
    out << '\n';
  }
}

}  // namespace modeldiff
