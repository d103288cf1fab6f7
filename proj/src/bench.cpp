#include "modeldiff/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "modeldiff/forest.hpp"
#include "modeldiff/random.hpp"
#include "text_util.hpp"

namespace modeldiff {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// DatasetSource

DatasetSource DatasetSource::parse(const std::string& text) {
  DatasetSource s;
  if (text.rfind("agrawal", 0) == 0 && text.size() == 8 && text[7] >= '1' && text[7] <= '3') {
    s.agrawal_function = text[7] - '0';
    return s;
  }
  if (text.rfind("csv:", 0) == 0 && text.size() > 4) {
    s.csv_path = text.substr(4);
    return s;
  }
  throw std::invalid_argument("unknown dataset '" + text + "' (expected agrawal1..3 or csv:PATH)");
}

std::string DatasetSource::id() const {
  if (is_agrawal()) return "agrawal" + std::to_string(agrawal_function);
  return "csv:" + csv_path.string();
}

// ---------------------------------------------------------------------------
// Single runs

PreparedRun prepare_run(const FeatureMatrix& source, const ScenarioSpec& scenario,
                        const RunOptions& options, std::uint64_t run_seed) {
  const auto start = Clock::now();
  if (!source.has_labels()) throw std::invalid_argument("benchmark stream must be labeled");
  FeatureMatrix sub = source.rows() == options.stream_rows
                          ? source
                          : subsample_stream(source, options.stream_rows,
                                             derive_seed(run_seed, stream::kSubsample));

  Scaler scaler;
  if (options.normalization == NormalizationBasis::FullStream) {
    scaler = Scaler::fit(sub);
  } else {
    const auto k = draw_split_index(sub.rows(), derive_seed(run_seed, stream::kSplitPoint));
    scaler = Scaler::fit(sub, 0, k);
  }
  FeatureMatrix stream = scaler.transform(sub);
  ModelPairData pair = make_model_pair(stream, scenario, run_seed);

  ForestParams fp;
  fp.n_estimators = options.n_estimators;
  const auto f = fit_forest(pair.x_f, fp, derive_seed(run_seed, stream::kModelF));
  const auto g = fit_forest(pair.x_g, fp, derive_seed(run_seed, stream::kModelG));
  DeltaDataset delta =
      build_delta_dataset(pair.x_f, pair.x_g, as_classifier(f), as_classifier(g), options.union_mode);
  return PreparedRun{std::move(stream), std::move(scaler), std::move(pair), std::move(delta),
                     ms_since(start)};
}

ExperimentResult evaluate_run(const PreparedRun& run, MinSamplesLeaf min_samples,
                              const RunOptions& options, std::uint64_t run_seed) {
  const auto start = Clock::now();
  ExperimentResult r;
  r.min_samples = min_samples.label();
  r.run_seed = run_seed;
  r.split_index = run.pair.split_index;
  for (auto j : run.pair.perturbed_features) {
    r.perturbed_features.push_back(run.stream.feature_names()[j]);
  }
  r.delta_rows = run.delta.rows();
  r.disagreements = run.delta.disagreements();
  r.prepare_ms = run.prepare_ms;

  ExplainOptions eo;
  eo.test_fraction = options.test_fraction;
  eo.basis = options.min_samples_basis;
  const Explanation ex =
      explain_delta(run.delta, min_samples, eo, derive_seed(run_seed, stream::kDeltaSplit));
  r.resolved_min_samples = ex.resolved_min_samples;
  r.delta_train_rows = ex.split.train.size();
  r.delta_test_rows = ex.split.test.size();
  r.fidelity = ex.fidelity;
  r.interpretability = ex.interpretability;
  r.mean_train_coverage = ex.mean_train_coverage;
  r.min_support = ex.min_support;
  r.overlap = ex.overlap;
  r.extraction_equivalent = ex.extraction_equivalent;
  if (!ex.extraction_equivalent) r.error = "rule set and Δ-tree predictions differ";
  r.evaluate_ms = ms_since(start);
  return r;
}

ExperimentResult run_single(const FeatureMatrix& source, const ScenarioSpec& scenario,
                            MinSamplesLeaf min_samples, std::uint64_t run_seed,
                            const RunOptions& options) {
  const PreparedRun run = prepare_run(source, scenario, options, run_seed);
  ExperimentResult r = evaluate_run(run, min_samples, options, run_seed);
  r.scenario = scenario_label(scenario.kind);
  return r;
}

// ---------------------------------------------------------------------------
// Aggregation

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  m.mean = mean;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::vector<AggregateRow> aggregate(const std::vector<ExperimentResult>& results) {
  struct Group {
    AggregateRow row;
    std::vector<double> acc, prec, rec, nr, len, cov;
  };
  std::vector<Group> groups;
  for (const auto& r : results) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.row.dataset == r.dataset && g.row.scenario == r.scenario &&
             g.row.min_samples == r.min_samples;
    });
    if (it == groups.end()) {
      groups.push_back({});
      it = std::prev(groups.end());
      it->row.dataset = r.dataset;
      it->row.scenario = r.scenario;
      it->row.min_samples = r.min_samples;
    }
    auto& g = *it;
    ++g.row.runs;
    if (r.error) {
      ++g.row.failed;
      continue;
    }
    g.nr.push_back(static_cast<double>(r.interpretability.num_rules));
    if (r.interpretability.num_rules == 0) continue;
    ++g.row.runs_with_rules;
    if (r.fidelity) {
      g.acc.push_back(r.fidelity->accuracy);
      if (r.fidelity->precision) g.prec.push_back(*r.fidelity->precision);
      if (r.fidelity->recall) g.rec.push_back(*r.fidelity->recall);
    }
    if (r.interpretability.mean_length) g.len.push_back(*r.interpretability.mean_length);
    if (r.interpretability.mean_coverage) g.cov.push_back(*r.interpretability.mean_coverage);
  }
  std::vector<AggregateRow> out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    g.row.accuracy = mean_std(g.acc);
    g.row.precision = mean_std(g.prec);
    g.row.recall = mean_std(g.rec);
    g.row.num_rules = mean_std(g.nr);
    g.row.mean_length = mean_std(g.len);
    g.row.mean_coverage = mean_std(g.cov);
    out.push_back(std::move(g.row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid

BenchConfig BenchConfig::defaults() {
  BenchConfig c;
  c.dataset = DatasetSource::parse("agrawal1");
  for (auto kind : {DriftKind::Noise, DriftKind::Permutation, DriftKind::Shift}) {
    ScenarioSpec s;
    s.kind = kind;
    c.scenarios.push_back(s);
  }
  c.grid = {MinSamplesLeaf::count(1),       MinSamplesLeaf::fraction(0.001),
            MinSamplesLeaf::fraction(0.01), MinSamplesLeaf::fraction(0.025),
            MinSamplesLeaf::fraction(0.1),  MinSamplesLeaf::fraction(0.25)};
  return c;
}

std::uint64_t run_seed_for(const BenchConfig& config, const ScenarioSpec& scenario,
                           std::size_t seed_index) {
  return derive_seed(config.master_seed, {hash_tag(config.dataset.id()),
                                          hash_tag(scenario_label(scenario.kind)),
                                          static_cast<std::uint64_t>(seed_index)});
}

GridResult run_grid(const BenchConfig& config, std::ostream* progress) {
  if (config.scenarios.empty()) throw std::invalid_argument("benchmark needs at least one scenario");
  if (config.grid.empty()) throw std::invalid_argument("benchmark needs at least one min-samples value");
  if (config.seeds == 0) throw std::invalid_argument("benchmark needs at least one seed");

  std::optional<FeatureMatrix> csv_stream;
  if (!config.dataset.is_agrawal()) {
    CsvOptions opts{config.dataset.label_column, config.dataset.positive_label};
    auto loaded = read_csv(config.dataset.csv_path, opts);
    if (progress && !loaded.dropped_columns.empty()) {
      *progress << "warning: dropped non-numeric columns:";
      for (const auto& c : loaded.dropped_columns) *progress << ' ' << c;
      *progress << '\n';
    }
    csv_stream = std::move(loaded.matrix);
  }

  const std::size_t n_scen = config.scenarios.size();
  const std::size_t n_grid = config.grid.size();
  const std::size_t n_units = n_scen * config.seeds;
  // cells[(s * n_grid + g) * seeds + i]
  std::vector<ExperimentResult> cells(n_units * n_grid);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto run_unit = [&](std::size_t unit) {
    const std::size_t s = unit / config.seeds;
    const std::size_t i = unit % config.seeds;
    const auto& scenario = config.scenarios[s];
    const auto seed = run_seed_for(config, scenario, i);
    const auto start = Clock::now();

    auto cell = [&](std::size_t g) -> ExperimentResult& { return cells[(s * n_grid + g) * config.seeds + i]; };
    std::optional<PreparedRun> prepared;
    std::string failure;
    try {
      if (config.dataset.is_agrawal()) {
        const auto source = agrawal_generate(config.run.stream_rows, config.dataset.agrawal_function,
                                             derive_seed(seed, stream::kGenerate));
        prepared.emplace(prepare_run(source, scenario, config.run, seed));
      } else {
        prepared.emplace(prepare_run(*csv_stream, scenario, config.run, seed));
      }
    } catch (const std::exception& e) {
      failure = e.what();
    }
    for (std::size_t g = 0; g < n_grid; ++g) {
      ExperimentResult r;
      if (prepared) {
        try {
          r = evaluate_run(*prepared, config.grid[g], config.run, seed);
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      } else {
        r.error = failure;
      }
      r.dataset = config.dataset.id();
      r.scenario = scenario_label(scenario.kind);
      r.min_samples = config.grid[g].label();
      r.seed_index = i;
      r.run_seed = seed;
      cell(g) = std::move(r);
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      *progress << '[' << ++done << '/' << n_units << "] " << scenario_label(scenario.kind)
                << " seed " << i << (failure.empty() ? "" : " FAILED: " + failure) << " ("
                << static_cast<long long>(ms_since(start)) << " ms)\n";
    }
  };

  std::size_t jobs = config.jobs == 0 ? std::max(1U, std::thread::hardware_concurrency()) : config.jobs;
  jobs = std::min(jobs, n_units);
  auto worker = [&] {
    for (std::size_t u = next++; u < n_units; u = next++) run_unit(u);
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  }

  GridResult out;
  out.runs = std::move(cells);
  out.rows = aggregate(out.runs);
  return out;
}

// ---------------------------------------------------------------------------
// Tables

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "text" || name == "txt") return TableFormat::Text;
  throw std::invalid_argument("unknown table format '" + name + "'");
}

namespace {

const char* const kMetricNames[] = {"accuracy", "precision", "recall",
                                    "num_rules", "mean_length", "mean_coverage"};

std::vector<const MeanStd*> metrics_of(const AggregateRow& r) {
  return {&r.accuracy, &r.precision, &r.recall, &r.num_rules, &r.mean_length, &r.mean_coverage};
}

std::string opt(const std::optional<double>& v) { return v ? detail::format_exact(*v) : "-"; }

std::optional<double> parse_opt(const std::string& cell) {
  if (cell == "-") return std::nullopt;
  auto v = detail::parse_double(cell);
  if (!v) throw ParseError("unparsable number '" + cell + "'");
  return v;
}

std::size_t parse_count(const std::string& cell) {
  auto v = detail::parse_int(cell);
  if (!v || *v < 0) throw ParseError("unparsable count '" + cell + "'");
  return static_cast<std::size_t>(*v);
}

std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string cell_text(const MeanStd& m, bool percent) {
  if (!m.mean) return "-";
  const double scale = percent ? 100.0 : 1.0;
  const std::string suffix = percent ? "%" : "";
  return detail::format_fixed(*m.mean * scale, 2) + suffix + " ± " +
         detail::format_fixed(m.std * scale, 2);
}

std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

std::string emit_table(const std::vector<AggregateRow>& rows, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << "dataset,scenario,min_samples,runs,runs_with_rules,failed";
    for (const char* m : kMetricNames) out << ',' << m << "_mean," << m << "_std," << m << "_n";
    out << '\n';
    for (const auto& r : rows) {
      out << csv_safe(r.dataset) << ',' << r.scenario << ',' << r.min_samples << ',' << r.runs << ','
          << r.runs_with_rules << ',' << r.failed;
      for (const auto* m : metrics_of(r)) {
        out << ',' << opt(m->mean) << ',' << (m->mean ? detail::format_exact(m->std) : "-") << ','
            << m->count;
      }
      out << '\n';
    }
    return out.str();
  }

  std::vector<std::vector<std::string>> table;
  table.push_back({"Dataset", "Scenario", "Min samples", "Runs", "Acc", "Prec", "Rec", "#r",
                   "Mean #l", "Mean cov"});
  for (const auto& r : rows) {
    table.push_back({r.dataset, r.scenario, r.min_samples,
                     std::to_string(r.runs - r.failed) + "/" + std::to_string(r.runs),
                     cell_text(r.accuracy, false), cell_text(r.precision, false),
                     cell_text(r.recall, false), cell_text(r.num_rules, false),
                     cell_text(r.mean_length, false), cell_text(r.mean_coverage, true)});
  }
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += " | ";
      line += row[c] + std::string(width[c] - display_width(row[c]), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (i == 0) {
      std::string rule;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) rule += "-+-";
        rule += std::string(width[c], '-');
      }
      out << rule << '\n';
    }
  }
  return out.str();
}

std::vector<AggregateRow> parse_aggregate_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty aggregate table");
  const std::size_t expected = 6 + 3 * std::size(kMetricNames);
  if (detail::split_csv_line(detail::strip_cr(line)).size() != expected) {
    throw ParseError("unexpected aggregate header", 1);
  }
  std::vector<AggregateRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != expected) throw ParseError("wrong cell count in aggregate row", lineno);
    AggregateRow r;
    r.dataset = cells[0];
    r.scenario = cells[1];
    r.min_samples = cells[2];
    r.runs = parse_count(cells[3]);
    r.runs_with_rules = parse_count(cells[4]);
    r.failed = parse_count(cells[5]);
    std::size_t c = 6;
    for (auto* m : {&r.accuracy, &r.precision, &r.recall, &r.num_rules, &r.mean_length,
                    &r.mean_coverage}) {
      m->mean = parse_opt(cells[c]);
      m->std = parse_opt(cells[c + 1]).value_or(0.0);
      m->count = parse_count(cells[c + 2]);
      c += 3;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string runs_csv(const std::vector<ExperimentResult>& runs) {
  std::ostringstream out;
  out << "dataset,scenario,min_samples,seed_index,run_seed,resolved_min_samples,split_index,"
         "perturbed_features,delta_rows,delta_train_rows,delta_test_rows,disagreements,"
         "accuracy,precision,recall,num_rules,mean_length,mean_coverage,mean_train_coverage,"
         "min_support,overlap,extraction_equivalent,error\n";
  for (const auto& r : runs) {
    std::string features;
    for (const auto& f : r.perturbed_features) features += (features.empty() ? "" : ";") + f;
    out << csv_safe(r.dataset) << ',' << r.scenario << ',' << r.min_samples << ',' << r.seed_index
        << ',' << r.run_seed << ',' << r.resolved_min_samples << ',' << r.split_index << ','
        << (features.empty() ? "-" : features) << ',' << r.delta_rows << ',' << r.delta_train_rows
        << ',' << r.delta_test_rows << ',' << r.disagreements << ',';
    if (r.fidelity) {
      out << detail::format_exact(r.fidelity->accuracy) << ',' << opt(r.fidelity->precision) << ','
          << opt(r.fidelity->recall);
    } else {
      out << "-,-,-";
    }
    out << ',' << r.interpretability.num_rules << ',' << opt(r.interpretability.mean_length) << ','
        << opt(r.interpretability.mean_coverage) << ',' << opt(r.mean_train_coverage) << ','
        << r.min_support << ',' << r.overlap << ',' << (r.extraction_equivalent ? 1 : 0) << ','
        << (r.error ? csv_safe(*r.error) : "") << '\n';
  }
  return out.str();
}

std::string timings_csv(const std::vector<ExperimentResult>& runs) {
  std::ostringstream out;
  out << "scenario,min_samples,seed_index,prepare_ms,evaluate_ms\n";
  for (const auto& r : runs) {
    out << r.scenario << ',' << r.min_samples << ',' << r.seed_index << ','
        << detail::format_fixed(r.prepare_ms, 1) << ',' << detail::format_fixed(r.evaluate_ms, 1)
        << '\n';
  }
  return out.str();
}

std::string manifest_json(const BenchConfig& config, const GridResult& result) {
  using nlohmann::json;
  json scenarios = json::array();
  for (const auto& s : config.scenarios) {
    json j{{"label", scenario_label(s.kind)}, {"kind", to_string(s.kind)}};
    if (s.kind == DriftKind::Noise) j["sigma"] = s.sigma;
    if (s.kind == DriftKind::Shift) j["delta"] = s.delta;
    j["k_features"] = s.num_features ? json(*s.num_features) : json("random");
    scenarios.push_back(j);
  }
  json grid = json::array();
  for (const auto& g : config.grid) grid.push_back(g.label());

  json doc;
  doc["tool"] = "modeldiff";
  doc["version"] = kVersion;
  doc["config"] = {
      {"dataset", config.dataset.id()},
      {"label_column", config.dataset.is_agrawal() ? json(nullptr) : json(config.dataset.label_column)},
      {"scenarios", scenarios},
      {"grid", grid},
      {"seeds", config.seeds},
      {"master_seed", config.master_seed},
      {"stream_rows", config.run.stream_rows},
      {"n_estimators", config.run.n_estimators},
      {"test_fraction", config.run.test_fraction},
      {"normalization",
       config.run.normalization == NormalizationBasis::FullStream ? "full-stream" : "first-split"},
      {"min_samples_basis",
       config.run.min_samples_basis == MinSamplesBasis::DeltaTrain ? "delta-train" : "delta-full"},
      {"union", config.run.union_mode == UnionMode::Set ? "set" : "multiset"},
  };
  json runs = json::array();
  for (const auto& r : result.runs) {
    json j{{"scenario", r.scenario},
           {"min_samples", r.min_samples},
           {"seed_index", r.seed_index},
           {"run_seed", r.run_seed},
           {"resolved_min_samples", r.resolved_min_samples},
           {"split_index", r.split_index},
           {"perturbed_features", r.perturbed_features},
           {"delta_rows", r.delta_rows},
           {"num_rules", r.interpretability.num_rules},
           {"mean_train_coverage",
            r.mean_train_coverage ? json(*r.mean_train_coverage) : json(nullptr)}};
    if (r.error) j["error"] = *r.error;
    runs.push_back(std::move(j));
  }
  doc["runs"] = runs;
  std::size_t failed = 0;
  for (const auto& r : result.runs) failed += r.error ? 1 : 0;
  doc["failed_runs"] = failed;
  return doc.dump(2) + "\n";
}

void write_bench_outputs(const std::filesystem::path& dir, const BenchConfig& config,
                         const GridResult& result) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  };
  write("metrics.csv", runs_csv(result.runs));
  write("summary.csv", emit_table(result.rows, TableFormat::Csv));
  write("summary.txt", emit_table(result.rows, TableFormat::Text));
  write("manifest.json", manifest_json(config, result));
  write("timings.csv", timings_csv(result.runs));
}

}  // namespace modeldiff
