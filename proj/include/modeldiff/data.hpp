#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modeldiff {

using Labels = std::vector<int>;

// Raised for malformed input files. Row and column are 1-based positions in
// the source file (row 1 is the header); zero means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0);

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// n x d table of finite reals, row-major, with optional binary labels.
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<std::string> feature_names, std::vector<double> values,
                std::optional<Labels> labels = std::nullopt);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }

  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  bool has_labels() const { return labels_.has_value(); }
  // Throws std::logic_error when the matrix is unlabeled.
  const Labels& labels() const;

  double at(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }
  std::vector<double> column(std::size_t col) const;
  // Index of the named feature, or nullopt.
  std::optional<std::size_t> find_feature(const std::string& name) const;

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  FeatureMatrix slice_rows(std::size_t begin, std::size_t end) const;
  FeatureMatrix with_labels(std::optional<Labels> labels) const;
  FeatureMatrix without_labels() const { return with_labels(std::nullopt); }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::optional<Labels> labels_;
  std::size_t rows_ = 0;
};

// Row-wise concatenation; feature names must match exactly. Labels are kept
// only when both parts carry them.
FeatureMatrix concat_rows(const FeatureMatrix& top, const FeatureMatrix& bottom);

struct DomainBounds {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t size() const { return lo.size(); }
  bool contains(std::span<const double> row) const;
  bool operator==(const DomainBounds&) const = default;
};

DomainBounds compute_domain(const FeatureMatrix& m);

// Per-feature standardization statistics, keyed by the ORIGINAL feature order.
// Features with zero variance are marked dropped and excluded from transform().
class Scaler {
 public:
  struct Entry {
    std::string name;
    double mean = 0.0;
    double stddev = 1.0;
    bool dropped = false;

    bool operator==(const Entry&) const = default;
  };

  Scaler() = default;
  explicit Scaler(std::vector<Entry> entries);

  // Population statistics over rows [begin, end) of m.
  static Scaler fit(const FeatureMatrix& m, std::size_t begin, std::size_t end);
  static Scaler fit(const FeatureMatrix& m) { return fit(m, 0, m.rows()); }
  static Scaler identity(const std::vector<std::string>& names);

  // Scales all rows of m, dropping zero-variance features. Column names of m
  // must equal the names the scaler was fitted on.
  FeatureMatrix transform(const FeatureMatrix& m) const;
  // Maps a standardized matrix (retained features only) back to feature units.
  FeatureMatrix inverse_transform(const FeatureMatrix& scaled) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> retained_names() const;
  std::vector<std::string> dropped_names() const;
  std::optional<std::size_t> index_of(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Scaler load(const std::filesystem::path& path);
  std::string to_text() const;
  static Scaler from_text(const std::string& text);

  bool operator==(const Scaler&) const = default;

 private:
  std::vector<Entry> entries_;
};

std::pair<FeatureMatrix, Scaler> standardize(const FeatureMatrix& m);

// t * std_j + mean_j for original feature index j. Throws std::out_of_range
// when the index is out of range and std::invalid_argument when dropped.
double inverse_transform_threshold(const Scaler& scaler, std::size_t feature, double t);

struct CsvOptions {
  // Column holding the binary target. When unset, the file is unlabeled.
  std::optional<std::string> label_column;
  // When set, the label is 1 iff the cell equals this string; otherwise the
  // cell must parse to 0 or 1.
  std::optional<std::string> positive_label;
};

struct CsvLoad {
  FeatureMatrix matrix;
  std::vector<std::string> dropped_columns;
};

// Numeric columns are detected from the first data row. A later cell that
// fails to parse in a numeric column is an error, not a silent drop.
CsvLoad read_csv(const std::filesystem::path& path, const CsvOptions& options);
// read_csv, plus a warning on stderr naming any dropped non-numeric columns.
FeatureMatrix load_csv(const std::filesystem::path& path,
                       std::optional<std::string> label_column);

// Header with feature names (plus `label_name` when labels are present).
void write_csv(const std::filesystem::path& path, const FeatureMatrix& m,
               const std::string& label_name = "label");

FeatureMatrix subsample_stream(const FeatureMatrix& m, std::size_t n, std::uint64_t seed);

// Uniform over [ceil(n/3), floor(2n/3)]. Requires n >= 3.
std::size_t draw_split_index(std::size_t n, std::uint64_t seed);

struct StreamSplit {
  FeatureMatrix first;
  FeatureMatrix second;
  std::size_t index;
};

StreamSplit split_at_random_point(const FeatureMatrix& m, std::uint64_t seed);

struct TrainTestIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Row partition with floor(test_fraction * n) test rows, stratified on the
// labels when present. Both index lists are sorted ascending.
TrainTestIndices train_test_indices(const FeatureMatrix& m, double test_fraction,
                                    std::uint64_t seed);

struct TrainTestSplit {
  FeatureMatrix train;
  FeatureMatrix test;
};

TrainTestSplit train_test_split(const FeatureMatrix& m, double test_fraction,
                                std::uint64_t seed);

}  // namespace modeldiff
