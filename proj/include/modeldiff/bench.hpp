#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modeldiff/data.hpp"
#include "modeldiff/delta.hpp"
#include "modeldiff/drift.hpp"
#include "modeldiff/metrics.hpp"
#include "modeldiff/pipeline.hpp"
#include "modeldiff/tree.hpp"

namespace modeldiff {

inline constexpr const char* kVersion = "1.0.0";

// Where the stream comes from: a synthetic AGRAWAL function or a CSV file.
struct DatasetSource {
  int agrawal_function = 0;  // 1..3, or 0 for CSV
  std::filesystem::path csv_path;
  std::string label_column = "label";
  std::optional<std::string> positive_label;

  // "agrawal1".."agrawal3" or "csv:PATH".
  static DatasetSource parse(const std::string& text);
  std::string id() const;
  bool is_agrawal() const { return agrawal_function != 0; }
};

// Whether standardization statistics come from the whole sub-stream or from
// the first split only.
enum class NormalizationBasis { FullStream, FirstSplit };

struct RunOptions {
  std::size_t stream_rows = 10000;
  std::size_t n_estimators = 100;
  double test_fraction = 0.3;
  NormalizationBasis normalization = NormalizationBasis::FullStream;
  MinSamplesBasis min_samples_basis = MinSamplesBasis::DeltaTrain;
  UnionMode union_mode = UnionMode::Set;
};

// The min-samples-independent part of one run: sub-stream, scaler, model
// pair, black boxes and the frozen Δ-dataset.
struct PreparedRun {
  FeatureMatrix stream;  // standardized, labeled
  Scaler scaler;
  ModelPairData pair;
  DeltaDataset delta;
  double prepare_ms = 0.0;
};

// Sub-samples `source` to options.stream_rows, standardizes, perturbs, trains
// f on X_f and g on X_g, and labels X_f ∪ X_g by disagreement.
PreparedRun prepare_run(const FeatureMatrix& source, const ScenarioSpec& scenario,
                        const RunOptions& options, std::uint64_t run_seed);

struct ExperimentResult {
  std::string dataset;
  std::string scenario;     // S1, S2, S3
  std::string min_samples;  // label, e.g. "1 sample" or "0.1%"
  std::size_t seed_index = 0;
  std::uint64_t run_seed = 0;

  std::size_t resolved_min_samples = 0;
  std::size_t split_index = 0;
  std::vector<std::string> perturbed_features;
  std::size_t delta_rows = 0;
  std::size_t delta_train_rows = 0;
  std::size_t delta_test_rows = 0;
  std::size_t disagreements = 0;

  std::optional<FidelityReport> fidelity;  // absent when no rule was extracted
  InterpretabilityReport interpretability;
  std::optional<double> mean_train_coverage;
  std::size_t min_support = 0;
  std::size_t overlap = 0;
  bool extraction_equivalent = true;

  std::optional<std::string> error;  // set when the cell failed
  double prepare_ms = 0.0;
  double evaluate_ms = 0.0;
};

ExperimentResult evaluate_run(const PreparedRun& run, MinSamplesLeaf min_samples,
                              const RunOptions& options, std::uint64_t run_seed);

ExperimentResult run_single(const FeatureMatrix& source, const ScenarioSpec& scenario,
                            MinSamplesLeaf min_samples, std::uint64_t run_seed,
                            const RunOptions& options = {});

struct MeanStd {
  std::optional<double> mean;
  double std = 0.0;  // sample standard deviation; 0 with fewer than two values
  std::size_t count = 0;

  bool operator==(const MeanStd&) const = default;
};

MeanStd mean_std(const std::vector<double>& values);

struct AggregateRow {
  std::string dataset;
  std::string scenario;
  std::string min_samples;
  std::size_t runs = 0;
  std::size_t runs_with_rules = 0;
  std::size_t failed = 0;
  // Over runs with at least one rule (and a defined value).
  MeanStd accuracy, precision, recall;
  // Over all successful runs, zero-rule runs included.
  MeanStd num_rules;
  // Over runs with at least one rule.
  MeanStd mean_length, mean_coverage;

  bool operator==(const AggregateRow&) const = default;
};

// Groups by (dataset, scenario, min_samples) in order of first appearance.
std::vector<AggregateRow> aggregate(const std::vector<ExperimentResult>& results);

struct BenchConfig {
  DatasetSource dataset;
  std::vector<ScenarioSpec> scenarios;
  std::vector<MinSamplesLeaf> grid;
  std::size_t seeds = 10;
  std::uint64_t master_seed = 0;
  RunOptions run;
  // Grid units (scenario x seed) run concurrently; output does not depend on it.
  std::size_t jobs = 1;

  // Benchmark defaults: S1/S2/S3 over {1 sample, 0.1%, 1%, 2.5%, 10%, 25%}.
  static BenchConfig defaults();
};

// Per-run seed, independent of the min-samples grid and of other cells.
std::uint64_t run_seed_for(const BenchConfig& config, const ScenarioSpec& scenario,
                           std::size_t seed_index);

struct GridResult {
  std::vector<ExperimentResult> runs;  // ordered by (scenario, min_samples, seed)
  std::vector<AggregateRow> rows;
};

// `progress`, when given, receives one line per finished unit.
GridResult run_grid(const BenchConfig& config, std::ostream* progress = nullptr);

enum class TableFormat { Csv, Text };
TableFormat parse_table_format(const std::string& name);

std::string emit_table(const std::vector<AggregateRow>& rows, TableFormat format);
std::vector<AggregateRow> parse_aggregate_csv(const std::string& text);

// Per-run metrics, one line per ExperimentResult. Contains no timings, so it
// is byte-identical across repeated runs with the same config.
std::string runs_csv(const std::vector<ExperimentResult>& runs);
std::string timings_csv(const std::vector<ExperimentResult>& runs);
std::string manifest_json(const BenchConfig& config, const GridResult& result);

// Writes metrics.csv, summary.csv, summary.txt, manifest.json, timings.csv.
void write_bench_outputs(const std::filesystem::path& dir, const BenchConfig& config,
                         const GridResult& result);

}  // namespace modeldiff
