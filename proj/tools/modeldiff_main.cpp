#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "modeldiff/bench.hpp"
#include "modeldiff/forest.hpp"
#include "modeldiff/random.hpp"
#include "modeldiff/rules.hpp"

namespace fs = std::filesystem;
using namespace modeldiff;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// `--config FILE` holds flat `key=value` defaults. They are spliced in right
// after the subcommand name; with last-wins options, flags on the command
// line override them.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest, from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::string line;
    while (std::getline(in, line)) {
      const auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        const auto e = t.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
      auto key = trim(line.substr(0, eq));
      auto value = trim(line.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      from_file.push_back("--" + key + "=" + value);
    }
  }
  const std::size_t at = !rest.empty() && rest[0].rfind("-", 0) != 0 ? 1 : 0;
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(at), from_file.begin(), from_file.end());
  return rest;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  s << *v;
  return s.str();
}

void print_fidelity(std::ostream& out, const FidelityReport& r) {
  out << "confusion: tp=" << r.true_positive << " fp=" << r.false_positive
      << " tn=" << r.true_negative << " fn=" << r.false_negative << '\n';
  out << "accuracy:  " << fmt_opt(r.accuracy) << '\n';
  out << "precision: " << fmt_opt(r.precision) << '\n';
  out << "recall:    " << fmt_opt(r.recall) << '\n';
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::size_t n = 10000;
  int function = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const auto m = agrawal_generate(a.n, a.function, derive_seed(a.seed, stream::kGenerate));
  write_csv(a.out, m);
  std::cerr << "wrote " << m.rows() << " rows to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ExplainArgs {
  std::string data;
  std::string preds_f, preds_g;
  bool train_forests = false;
  std::string data_f, data_g;
  std::optional<std::string> label;
  std::string min_samples = "0.01";
  std::string out;
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  std::size_t trees = 100;
  std::size_t jobs = 1;
  std::string basis = "train";
  std::string delta_out;
  std::string scaler_out;
};

int cmd_explain(const ExplainArgs& a) {
  std::optional<DeltaDataset> built;
  Scaler scaler;
  if (a.train_forests) {
    if (a.data_f.empty() || a.data_g.empty() || !a.label) {
      throw CLI::ValidationError("--train-forests needs --data-f, --data-g and --label");
    }
    const auto raw_f = load_csv(a.data_f, a.label);
    const auto raw_g = load_csv(a.data_g, a.label);
    if (raw_f.feature_names() != raw_g.feature_names()) {
      throw std::invalid_argument("--data-f and --data-g have different feature columns");
    }
    scaler = Scaler::fit(concat_rows(raw_f, raw_g));
    const auto x_f = scaler.transform(raw_f);
    const auto x_g = scaler.transform(raw_g);
    ForestParams fp;
    fp.n_estimators = a.trees;
    fp.jobs = a.jobs;
    std::cerr << "training f on " << x_f.rows() << " rows, g on " << x_g.rows() << " rows\n";
    auto f = fit_forest(x_f, fp, derive_seed(a.seed, stream::kModelF));
    auto g = fit_forest(x_g, fp, derive_seed(a.seed, stream::kModelG));
    built = build_delta_dataset(x_f, x_g, as_classifier(std::move(f)), as_classifier(std::move(g)));
  } else {
    if (a.data.empty() || a.preds_f.empty() || a.preds_g.empty()) {
      throw CLI::ValidationError("explain needs --data, --preds-f and --preds-g (or --train-forests)");
    }
    auto raw = load_csv(a.data, a.label).without_labels();
    const auto pf = predictions_from_file(a.preds_f, raw.rows());
    const auto pg = predictions_from_file(a.preds_g, raw.rows());
    scaler = Scaler::fit(raw);
    built = delta_from_predictions(scaler.transform(raw), pf, pg);
  }
  const DeltaDataset& delta = *built;
  std::cerr << "Δ-dataset: " << delta.rows() << " rows, " << delta.disagreements()
            << " disagreements\n";
  if (!a.delta_out.empty()) write_delta_csv(a.delta_out, delta);
  if (!a.scaler_out.empty()) scaler.save(a.scaler_out);

  ExplainOptions options;
  options.test_fraction = a.test_fraction;
  options.basis = a.basis == "full" ? MinSamplesBasis::DeltaFull : MinSamplesBasis::DeltaTrain;
  const auto ex = explain_delta(delta, MinSamplesLeaf::parse(a.min_samples), options,
                                derive_seed(a.seed, stream::kDeltaSplit));

  std::cout << render_text(denormalize(ex.rules, scaler), delta.rows());
  std::cerr << "min_samples_leaf resolved to " << ex.resolved_min_samples << '\n';
  if (ex.fidelity) {
    print_fidelity(std::cerr, *ex.fidelity);
  } else {
    std::cerr << "fidelity: undefined (no rules)\n";
  }
  if (!a.out.empty()) write_text(a.out, rules_to_json(ex.rules, scaler, delta.rows()));
  return ex.extraction_equivalent ? 0 : 3;
}

// ---------------------------------------------------------------------------

struct DiffArgs {
  std::string predicted, actual;
};

int cmd_diff(const DiffArgs& a) {
  const auto predicted = predictions_from_file(a.predicted);
  const auto actual = predictions_from_file(a.actual, predicted.size());
  print_fidelity(std::cout, fidelity_metrics(predicted, actual));
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string dataset = "agrawal1";
  std::string scenarios = "s1,s2,s3";
  std::string grid = "1,0.001,0.01,0.025,0.1,0.25";
  std::size_t seeds = 10;
  std::string out;
  std::size_t n = 10000;
  std::uint64_t master_seed = 0;
  double sigma = 0.5;
  double delta = 2.0;
  std::optional<std::size_t> k_features;
  std::size_t jobs = 1;
  std::size_t trees = 100;
  std::string label = "label";
  std::optional<std::string> positive_label;
  std::string normalize = "full";
  std::string basis = "train";
  std::string union_mode = "set";
  std::string format = "text";
  bool quiet = false;
};

int cmd_bench(const BenchArgs& a) {
  BenchConfig config;
  config.dataset = DatasetSource::parse(a.dataset);
  config.dataset.label_column = a.label;
  config.dataset.positive_label = a.positive_label;
  for (const auto& s : split_list(a.scenarios)) {
    ScenarioSpec spec;
    spec.kind = parse_drift_kind(s);
    spec.sigma = a.sigma;
    spec.delta = a.delta;
    spec.num_features = a.k_features;
    config.scenarios.push_back(spec);
  }
  for (const auto& g : split_list(a.grid)) config.grid.push_back(MinSamplesLeaf::parse(g));
  config.seeds = a.seeds;
  config.master_seed = a.master_seed;
  config.jobs = a.jobs;
  config.run.stream_rows = a.n;
  config.run.n_estimators = a.trees;
  config.run.normalization =
      a.normalize == "first-split" ? NormalizationBasis::FirstSplit : NormalizationBasis::FullStream;
  config.run.min_samples_basis =
      a.basis == "full" ? MinSamplesBasis::DeltaFull : MinSamplesBasis::DeltaTrain;
  config.run.union_mode = a.union_mode == "multiset" ? UnionMode::Multiset : UnionMode::Set;
  const auto format = parse_table_format(a.format);

  const auto result = run_grid(config, a.quiet ? nullptr : &std::cerr);
  if (!a.out.empty()) write_bench_outputs(a.out, config, result);
  std::cout << emit_table(result.rows, format);
  std::size_t failed = 0;
  for (const auto& r : result.runs) failed += r.error ? 1 : 0;
  if (failed) std::cerr << failed << " run(s) failed; see metrics.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explain where two binary classifiers disagree, as interval rules"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;  // consumed by expand_config

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write an AGRAWAL stream as CSV");
  gen_cmd->add_option("--config", config_file, "flat key=value file with option defaults");
  gen_cmd->add_option("--n", gen.n, "rows")->capture_default_str();
  gen_cmd->add_option("--function", gen.function, "classification function 1..3")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output CSV")->required();

  ExplainArgs ex;
  auto* ex_cmd = app.add_subcommand("explain", "Extract disagreement rules for a model pair");
  ex_cmd->add_option("--config", config_file, "flat key=value file with option defaults");
  ex_cmd->add_option("--data", ex.data, "CSV scored by both models");
  ex_cmd->add_option("--preds-f", ex.preds_f, "predictions of f, one 0/1 per line");
  ex_cmd->add_option("--preds-g", ex.preds_g, "predictions of g, one 0/1 per line");
  ex_cmd->add_flag("--train-forests", ex.train_forests, "fit f and g as random forests");
  ex_cmd->add_option("--data-f", ex.data_f, "training CSV for f");
  ex_cmd->add_option("--data-g", ex.data_g, "training CSV for g");
  ex_cmd->add_option("--label", ex.label, "label column (dropped from features)");
  ex_cmd->add_option("--min-samples", ex.min_samples, "count (5), fraction (0.01) or percent (1%)")
      ->capture_default_str();
  ex_cmd->add_option("--out", ex.out, "rules JSON output");
  ex_cmd->add_option("--seed", ex.seed)->capture_default_str();
  ex_cmd->add_option("--test-fraction", ex.test_fraction)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  ex_cmd->add_option("--trees", ex.trees, "forest size with --train-forests")->capture_default_str();
  ex_cmd->add_option("--jobs", ex.jobs, "forest training threads (0 = all cores)")->capture_default_str();
  ex_cmd->add_option("--min-samples-basis", ex.basis, "fractions resolve against train or full")
      ->check(CLI::IsMember({"train", "full"}))
      ->capture_default_str();
  ex_cmd->add_option("--save-delta", ex.delta_out, "write the Δ-dataset CSV");
  ex_cmd->add_option("--save-scaler", ex.scaler_out, "write the fitted scaler");

  DiffArgs diff;
  auto* diff_cmd = app.add_subcommand("diff-predictions", "Fidelity report for two label files");
  diff_cmd->add_option("--config", config_file, "flat key=value file with option defaults");
  diff_cmd->add_option("--predicted", diff.predicted, "predicted labels, one 0/1 per line")->required();
  diff_cmd->add_option("--actual", diff.actual, "reference labels, one 0/1 per line")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the drift-scenario benchmark grid");
  bench_cmd->add_option("--config", config_file, "flat key=value file with option defaults");
  bench_cmd->add_option("--dataset", bench.dataset, "agrawal1|agrawal2|agrawal3|csv:PATH")
      ->capture_default_str();
  bench_cmd->add_option("--scenarios,--scenario", bench.scenarios, "comma list of s1|s2|s3|noise|permute|shift")
      ->capture_default_str();
  bench_cmd->add_option("--grid", bench.grid, "comma list of min-samples settings")->capture_default_str();
  bench_cmd->add_option("--seeds", bench.seeds, "runs per cell")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "output directory");
  bench_cmd->add_option("--n", bench.n, "stream rows per run")->capture_default_str();
  bench_cmd->add_option("--master-seed,--seed", bench.master_seed)->capture_default_str();
  bench_cmd->add_option("--sigma", bench.sigma, "S1 noise std (scaled units)")->capture_default_str();
  bench_cmd->add_option("--delta", bench.delta, "S3 shift (scaled units)")->capture_default_str();
  bench_cmd->add_option("--k-features", bench.k_features, "fixed number of perturbed features");
  bench_cmd->add_option("--jobs", bench.jobs, "parallel runs (0 = all cores)")->capture_default_str();
  bench_cmd->add_option("--trees", bench.trees, "trees per black-box forest")->capture_default_str();
  bench_cmd->add_option("--label", bench.label, "label column for csv datasets")->capture_default_str();
  bench_cmd->add_option("--positive-label", bench.positive_label, "label value mapped to 1");
  bench_cmd->add_option("--normalize", bench.normalize, "scaler statistics source")
      ->check(CLI::IsMember({"full", "first-split"}))
      ->capture_default_str();
  bench_cmd->add_option("--min-samples-basis", bench.basis)
      ->check(CLI::IsMember({"train", "full"}))
      ->capture_default_str();
  bench_cmd->add_option("--union", bench.union_mode, "Δ-dataset union semantics")
      ->check(CLI::IsMember({"set", "multiset"}))
      ->capture_default_str();
  bench_cmd->add_option("--format", bench.format, "stdout table format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  bench_cmd->add_flag("--quiet", bench.quiet, "no progress lines");

  try {
    auto args = expand_config(std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*ex_cmd) return cmd_explain(ex);
    if (*diff_cmd) return cmd_diff(diff);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
