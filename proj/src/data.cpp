#include "modeldiff/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "modeldiff/random.hpp"
#include "text_util.hpp"

namespace modeldiff {

ParseError::ParseError(const std::string& what, std::size_t row, std::size_t column)
    : std::runtime_error(what), row_(row), column_(column) {}

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names, std::vector<double> values,
                             std::optional<Labels> labels)
    : names_(std::move(feature_names)), values_(std::move(values)), labels_(std::move(labels)) {
  if (names_.empty()) throw std::invalid_argument("feature matrix needs at least one feature");
  if (values_.size() % names_.size() != 0) {
    throw std::invalid_argument("value count is not a multiple of the feature count");
  }
  rows_ = values_.size() / names_.size();
  if (rows_ == 0) throw std::invalid_argument("feature matrix needs at least one row");
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) {
      throw std::invalid_argument("duplicate feature name '" + name + "'");
    }
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("non-finite value at row " + std::to_string(i / cols()) +
                                  ", feature '" + names_[i % cols()] + "'");
    }
  }
  if (labels_) {
    if (labels_->size() != rows_) {
      throw std::invalid_argument("label count " + std::to_string(labels_->size()) +
                                  " does not match row count " + std::to_string(rows_));
    }
    for (int y : *labels_) {
      if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    }
  }
}

const Labels& FeatureMatrix::labels() const {
  if (!labels_) throw std::logic_error("feature matrix has no labels");
  return *labels_;
}

std::vector<double> FeatureMatrix::column(std::size_t col) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, col);
  return out;
}

std::optional<std::size_t> FeatureMatrix::find_feature(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * cols());
  std::optional<Labels> labels;
  if (labels_) labels.emplace().reserve(indices.size());
  for (auto i : indices) {
    if (i >= rows_) throw std::out_of_range("row index out of range");
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (labels) labels->push_back((*labels_)[i]);
  }
  return FeatureMatrix(names_, std::move(values), std::move(labels));
}

FeatureMatrix FeatureMatrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw std::out_of_range("row slice out of range");
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return select_rows(idx);
}

FeatureMatrix FeatureMatrix::with_labels(std::optional<Labels> labels) const {
  return FeatureMatrix(names_, values_, std::move(labels));
}

FeatureMatrix concat_rows(const FeatureMatrix& top, const FeatureMatrix& bottom) {
  if (top.feature_names() != bottom.feature_names()) {
    throw std::invalid_argument("cannot concatenate matrices with different features");
  }
  std::vector<double> values = top.values();
  values.insert(values.end(), bottom.values().begin(), bottom.values().end());
  std::optional<Labels> labels;
  if (top.has_labels() && bottom.has_labels()) {
    labels = top.labels();
    labels->insert(labels->end(), bottom.labels().begin(), bottom.labels().end());
  }
  return FeatureMatrix(top.feature_names(), std::move(values), std::move(labels));
}

bool DomainBounds::contains(std::span<const double> row) const {
  if (row.size() != size()) return false;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] < lo[j] || row[j] > hi[j]) return false;
  }
  return true;
}

DomainBounds compute_domain(const FeatureMatrix& m) {
  DomainBounds b;
  auto first = m.row(0);
  b.lo.assign(first.begin(), first.end());
  b.hi = b.lo;
  for (std::size_t r = 1; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      b.lo[j] = std::min(b.lo[j], row[j]);
      b.hi[j] = std::max(b.hi[j], row[j]);
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Scaler

Scaler::Scaler(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!e.dropped && !(e.stddev > 0.0 && std::isfinite(e.stddev))) {
      throw std::invalid_argument("retained feature '" + e.name + "' needs a positive stddev");
    }
  }
}

Scaler Scaler::fit(const FeatureMatrix& m, std::size_t begin, std::size_t end) {
  if (begin >= end || end > m.rows()) throw std::out_of_range("scaler fit range out of range");
  const auto n = static_cast<double>(end - begin);
  std::vector<Entry> entries;
  entries.reserve(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t r = begin; r < end; ++r) sum += m.at(r, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      const double dev = m.at(r, j) - mean;
      ss += dev * dev;
    }
    const double stddev = std::sqrt(ss / n);
    Entry e{m.feature_names()[j], mean, stddev, false};
    // Relative floor so a constant column whose mean is inexact still counts as constant.
    if (!(stddev > 1e-12 * std::max(1.0, std::abs(mean)))) {
      e.stddev = 0.0;
      e.dropped = true;
    }
    entries.push_back(std::move(e));
  }
  Scaler s;
  s.entries_ = std::move(entries);
  return s;
}

Scaler Scaler::identity(const std::vector<std::string>& names) {
  std::vector<Entry> entries;
  for (const auto& n : names) entries.push_back({n, 0.0, 1.0, false});
  return Scaler(std::move(entries));
}

std::vector<std::string> Scaler::retained_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (!e.dropped) out.push_back(e.name);
  return out;
}

std::vector<std::string> Scaler::dropped_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.dropped) out.push_back(e.name);
  return out;
}

std::optional<std::size_t> Scaler::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < entries_.size(); ++j)
    if (entries_[j].name == name) return j;
  return std::nullopt;
}

FeatureMatrix Scaler::transform(const FeatureMatrix& m) const {
  if (m.cols() != entries_.size()) throw std::invalid_argument("scaler/matrix feature mismatch");
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    if (m.feature_names()[j] != entries_[j].name) {
      throw std::invalid_argument("scaler/matrix feature mismatch at '" + entries_[j].name + "'");
    }
    if (!entries_[j].dropped) kept.push_back(j);
  }
  if (kept.empty()) throw std::invalid_argument("all features have zero variance");
  std::vector<double> values;
  values.reserve(m.rows() * kept.size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (auto j : kept) values.push_back((m.at(r, j) - entries_[j].mean) / entries_[j].stddev);
  }
  std::optional<Labels> labels;
  if (m.has_labels()) labels = m.labels();
  return FeatureMatrix(retained_names(), std::move(values), std::move(labels));
}

FeatureMatrix Scaler::inverse_transform(const FeatureMatrix& scaled) const {
  std::vector<const Entry*> cols;
  for (const auto& name : scaled.feature_names()) {
    auto j = index_of(name);
    if (!j || entries_[*j].dropped) {
      throw std::invalid_argument("feature '" + name + "' is not retained by the scaler");
    }
    cols.push_back(&entries_[*j]);
  }
  std::vector<double> values(scaled.values().size());
  for (std::size_t r = 0; r < scaled.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      values[r * cols.size() + c] = scaled.at(r, c) * cols[c]->stddev + cols[c]->mean;
    }
  }
  std::optional<Labels> labels;
  if (scaled.has_labels()) labels = scaled.labels();
  return FeatureMatrix(scaled.feature_names(), std::move(values), std::move(labels));
}

// One line per feature in original order:
//   <name>=<mean> <stddev>
//   <name>=dropped
// Values are printed with 17 significant digits so reload is exact.
std::string Scaler::to_text() const {
  std::ostringstream out;
  out << "# modeldiff scaler v1\n";
  for (const auto& e : entries_) {
    out << e.name << '=' << detail::format_exact(e.mean) << ' ' << detail::format_exact(e.stddev)
        << (e.dropped ? " dropped\n" : "\n");
  }
  return out.str();
}

Scaler Scaler::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Entry> entries;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.rfind('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("scaler line without '='", lineno);
    Entry e;
    e.name = line.substr(0, eq);
    std::istringstream fields(line.substr(eq + 1));
    std::string mean_text, sd_text, flag, extra;
    fields >> mean_text >> sd_text >> flag >> extra;
    auto mean = detail::parse_double(mean_text);
    auto sd = detail::parse_double(sd_text);
    if (!mean || !sd) throw ParseError("scaler line needs a mean and a stddev", lineno);
    if (!(flag.empty() || flag == "dropped") || !extra.empty()) {
      throw ParseError("unexpected text after scaler statistics", lineno);
    }
    e.mean = *mean;
    e.stddev = *sd;
    e.dropped = flag == "dropped";
    entries.push_back(std::move(e));
  }
  return Scaler(std::move(entries));
}

void Scaler::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_text();
}

Scaler Scaler::load(const std::filesystem::path& path) {
  return from_text(detail::read_file(path));
}

std::pair<FeatureMatrix, Scaler> standardize(const FeatureMatrix& m) {
  if (m.rows() < 2) throw std::invalid_argument("standardize needs at least two rows");
  Scaler s = Scaler::fit(m);
  FeatureMatrix out = s.transform(m);
  return {std::move(out), std::move(s)};
}

double inverse_transform_threshold(const Scaler& scaler, std::size_t feature, double t) {
  if (feature >= scaler.entries().size()) throw std::out_of_range("feature index out of range");
  const auto& e = scaler.entries()[feature];
  if (e.dropped) throw std::invalid_argument("feature '" + e.name + "' was dropped by the scaler");
  return t * e.stddev + e.mean;
}

// ---------------------------------------------------------------------------
// CSV

CsvLoad read_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file " + path.string(), 1);
  auto header = detail::split_csv_line(detail::strip_cr(line));
  if (!header.empty()) header[0] = detail::strip_bom(header[0]);
  for (auto& h : header) h = detail::trim(h);

  std::optional<std::size_t> label_col;
  if (options.label_column) {
    auto it = std::find(header.begin(), header.end(), *options.label_column);
    if (it == header.end()) {
      throw ParseError("label column '" + *options.label_column + "' not found", 1);
    }
    label_col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::size_t> numeric;
  std::vector<std::string> dropped;
  std::vector<double> values;
  Labels labels;
  std::size_t rowno = 1;
  bool typed = false;
  while (std::getline(in, line)) {
    ++rowno;
    line = detail::strip_cr(line);
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       rowno);
    }
    if (!typed) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (label_col && c == *label_col) continue;
        if (detail::parse_double(detail::trim(cells[c]))) {
          numeric.push_back(c);
        } else {
          dropped.push_back(header[c]);
        }
      }
      typed = true;
    }
    for (auto c : numeric) {
      auto v = detail::parse_double(detail::trim(cells[c]));
      if (!v || !std::isfinite(*v)) {
        throw ParseError("unparsable numeric cell '" + cells[c] + "' in column '" + header[c] +
                             "' at row " + std::to_string(rowno),
                         rowno, c + 1);
      }
      values.push_back(*v);
    }
    if (label_col) {
      const std::string cell = detail::trim(cells[*label_col]);
      if (options.positive_label) {
        labels.push_back(cell == *options.positive_label ? 1 : 0);
      } else {
        auto v = detail::parse_double(cell);
        if (!v || (*v != 0.0 && *v != 1.0)) {
          throw ParseError("label '" + cell + "' at row " + std::to_string(rowno) +
                               " is not 0 or 1",
                           rowno, *label_col + 1);
        }
        labels.push_back(static_cast<int>(*v));
      }
    }
  }
  if (!typed) throw ParseError("no data rows in " + path.string(), rowno);
  if (numeric.empty()) throw ParseError("no numeric feature columns in " + path.string(), 1);

  std::vector<std::string> names;
  for (auto c : numeric) names.push_back(header[c]);
  std::optional<Labels> lab;
  if (label_col) lab = std::move(labels);
  return {FeatureMatrix(std::move(names), std::move(values), std::move(lab)), std::move(dropped)};
}

FeatureMatrix load_csv(const std::filesystem::path& path,
                       std::optional<std::string> label_column) {
  auto loaded = read_csv(path, CsvOptions{std::move(label_column), std::nullopt});
  if (!loaded.dropped_columns.empty()) {
    std::cerr << "warning: dropped non-numeric columns from " << path.string() << ":";
    for (const auto& c : loaded.dropped_columns) std::cerr << ' ' << c;
    std::cerr << '\n';
  }
  return std::move(loaded.matrix);
}

void write_csv(const std::filesystem::path& path, const FeatureMatrix& m,
               const std::string& label_name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& names = m.feature_names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  if (m.has_labels()) out << ',' << label_name;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? "," : "") << detail::format_exact(row[j]);
    }
    if (m.has_labels()) out << ',' << m.labels()[r];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stream protocols

FeatureMatrix subsample_stream(const FeatureMatrix& m, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sub-stream length must be positive");
  if (m.rows() < n) {
    throw std::invalid_argument("stream of " + std::to_string(m.rows()) +
                                " rows is shorter than requested " + std::to_string(n));
  }
  Rng rng(seed);
  const auto start = static_cast<std::size_t>(uniform_index(rng, 0, m.rows() - n));
  return m.slice_rows(start, start + n);
}

std::size_t draw_split_index(std::size_t n, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("random split needs at least three rows");
  const std::size_t lo = (n + 2) / 3;
  const std::size_t hi = 2 * n / 3;
  Rng rng(seed);
  return static_cast<std::size_t>(uniform_index(rng, lo, hi));
}

StreamSplit split_at_random_point(const FeatureMatrix& m, std::uint64_t seed) {
  const auto k = draw_split_index(m.rows(), seed);
  return {m.slice_rows(0, k), m.slice_rows(k, m.rows()), k};
}

TrainTestIndices train_test_indices(const FeatureMatrix& m, double test_fraction,
                                    std::uint64_t seed) {
  if (m.rows() < 2) throw std::invalid_argument("train/test split needs at least two rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  const std::size_t n = m.rows();
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 1e-9));

  // Strata: one per class when labeled, otherwise a single stratum.
  std::vector<std::vector<std::size_t>> strata(m.has_labels() ? 2 : 1);
  for (std::size_t i = 0; i < n; ++i) strata[m.has_labels() ? m.labels()[i] : 0].push_back(i);

  // Largest-remainder allocation of the test quota across strata.
  std::vector<std::size_t> quota(strata.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const double exact = static_cast<double>(n_test) * static_cast<double>(strata[s].size()) /
                         static_cast<double>(n);
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[s];
    remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n_test; ++i) {
    const auto s = remainders[i % remainders.size()].second;
    if (quota[s] < strata[s].size()) {
      ++quota[s];
      ++assigned;
    }
  }

  Rng rng(seed);
  TrainTestIndices out;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& rows = strata[s];
    shuffle(rows.begin(), rows.end(), rng);
    out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<long>(quota[s]));
    out.train.insert(out.train.end(), rows.begin() + static_cast<long>(quota[s]), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainTestSplit train_test_split(const FeatureMatrix& m, double test_fraction,
                                std::uint64_t seed) {
  auto idx = train_test_indices(m, test_fraction, seed);
  if (idx.train.empty() || idx.test.empty()) {
    throw std::invalid_argument("train/test split of " + std::to_string(m.rows()) +
                                " rows leaves one side empty");
  }
  return {m.select_rows(idx.train), m.select_rows(idx.test)};
}

}  // namespace modeldiff
