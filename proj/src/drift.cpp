#include "modeldiff/drift.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>

#include "modeldiff/random.hpp"

namespace modeldiff {

namespace agrawal {

std::vector<std::string> feature_names() {
  return {"salary", "commission", "age", "education level", "house value", "house years", "loan"};
}

int classify(int function_id, std::span<const double> row) {
  const double age = row[kAge];
  const double salary = row[kSalary];
  const double elevel = row[kEducation];
  switch (function_id) {
    case 1:
      return (age < 40 || age >= 60) ? 1 : 0;
    case 2:
      if (age < 40) return (salary >= 50000 && salary <= 100000) ? 1 : 0;
      if (age < 60) return (salary >= 75000 && salary <= 125000) ? 1 : 0;
      return (salary >= 25000 && salary <= 75000) ? 1 : 0;
    case 3:
      if (age < 40) return (elevel == 0 || elevel == 1) ? 1 : 0;
      if (age < 60) return (elevel >= 1 && elevel <= 3) ? 1 : 0;
      return (elevel >= 2 && elevel <= 4) ? 1 : 0;
    default:
      throw std::invalid_argument("unknown AGRAWAL function id " + std::to_string(function_id));
  }
}

}  // namespace agrawal

FeatureMatrix agrawal_generate(std::size_t n, int function_id, std::uint64_t seed) {
  if (function_id < 1 || function_id > 3) {
    throw std::invalid_argument("unknown AGRAWAL function id " + std::to_string(function_id));
  }
  if (n == 0) throw std::invalid_argument("AGRAWAL stream length must be positive");
  const auto names = agrawal::feature_names();
  std::vector<double> values;
  values.reserve(n * names.size());
  Labels labels;
  labels.reserve(n);
  Rng rng(seed);
  std::vector<double> row(names.size());
  for (std::size_t i = 0; i < n; ++i) {
    row[agrawal::kSalary] = uniform_real(rng, 20000.0, 150000.0);
    row[agrawal::kCommission] =
        row[agrawal::kSalary] >= 75000.0 ? 0.0 : uniform_real(rng, 10000.0, 75000.0);
    row[agrawal::kAge] = static_cast<double>(uniform_index(rng, 20, 80));
    row[agrawal::kEducation] = static_cast<double>(uniform_index(rng, 0, 4));
    const auto zipcode = static_cast<double>(uniform_index(rng, 0, 8));
    row[agrawal::kHouseValue] = (9.0 - zipcode) * 100000.0 * uniform_real(rng, 0.5, 1.5);
    row[agrawal::kHouseYears] = static_cast<double>(uniform_index(rng, 1, 30));
    row[agrawal::kLoan] = uniform_real(rng, 0.0, 500000.0);
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(agrawal::classify(function_id, row));
  }
  return FeatureMatrix(names, std::move(values), std::move(labels));
}

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::Noise:
      return "noise";
    case DriftKind::Permutation:
      return "permute";
    case DriftKind::Shift:
      return "shift";
  }
  return "?";
}

std::string scenario_label(DriftKind kind) {
  switch (kind) {
    case DriftKind::Noise:
      return "S1";
    case DriftKind::Permutation:
      return "S2";
    case DriftKind::Shift:
      return "S3";
  }
  return "?";
}

DriftKind parse_drift_kind(const std::string& text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "s1" || s == "noise") return DriftKind::Noise;
  if (s == "s2" || s == "permute" || s == "permutation") return DriftKind::Permutation;
  if (s == "s3" || s == "shift") return DriftKind::Shift;
  throw std::invalid_argument("unknown scenario '" + text + "'");
}

namespace {

std::size_t min_features(DriftKind kind) { return kind == DriftKind::Shift ? 2 : 1; }

void check_features(const FeatureMatrix& m, std::span<const std::size_t> features) {
  if (features.empty()) throw std::invalid_argument("perturbation needs at least one feature");
  for (auto j : features) {
    if (j >= m.cols()) throw std::out_of_range("perturbed feature index out of range");
  }
}

FeatureMatrix rebuild(const FeatureMatrix& like, std::vector<double> values) {
  std::optional<Labels> labels;
  if (like.has_labels()) labels = like.labels();
  return FeatureMatrix(like.feature_names(), std::move(values), std::move(labels));
}

}  // namespace

void ScenarioSpec::validate(std::size_t d) const {
  if (kind == DriftKind::Noise && !(sigma > 0.0)) {
    throw std::invalid_argument("noise sigma must be positive");
  }
  if (kind == DriftKind::Shift && delta == 0.0) {
    throw std::invalid_argument("shift delta must be non-zero");
  }
  if (d < min_features(kind)) {
    throw std::invalid_argument(scenario_label(kind) + " needs at least " +
                                std::to_string(min_features(kind)) + " features");
  }
  if (num_features && (*num_features < min_features(kind) || *num_features > d)) {
    throw std::invalid_argument("feature count " + std::to_string(*num_features) +
                                " outside [" + std::to_string(min_features(kind)) + ", " +
                                std::to_string(d) + "]");
  }
}

std::vector<std::size_t> choose_features(const ScenarioSpec& spec, std::size_t d,
                                         std::uint64_t seed) {
  spec.validate(d);
  Rng rng(seed);
  const std::size_t k =
      spec.num_features ? *spec.num_features
                        : static_cast<std::size_t>(uniform_index(rng, min_features(spec.kind), d));
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), 0);
  shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

FeatureMatrix perturb_noise(const FeatureMatrix& split, std::span<const std::size_t> features,
                            double sigma, std::uint64_t seed) {
  check_features(split, features);
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  std::vector<double> values = split.values();
  const std::size_t d = split.cols();
  for (auto j : features) {
    // One stream per column keeps columns independent of the subset drawn.
    Rng rng(derive_seed(seed, j));
    for (std::size_t r = 0; r < split.rows(); ++r) values[r * d + j] += sigma * standard_normal(rng);
  }
  return rebuild(split, std::move(values));
}

FeatureMatrix perturb_permutation(const FeatureMatrix& split,
                                  std::span<const std::size_t> features, std::uint64_t seed) {
  check_features(split, features);
  std::vector<double> values = split.values();
  const std::size_t d = split.cols();
  for (auto j : features) {
    Rng rng(derive_seed(seed, j));
    std::vector<double> col = split.column(j);
    shuffle(col.begin(), col.end(), rng);
    for (std::size_t r = 0; r < split.rows(); ++r) values[r * d + j] = col[r];
  }
  return rebuild(split, std::move(values));
}

FeatureMatrix perturb_shift(const FeatureMatrix& split, std::span<const std::size_t> features,
                            double delta) {
  check_features(split, features);
  if (features.size() < 2) throw std::invalid_argument("shift needs at least two features");
  std::vector<double> values = split.values();
  const std::size_t d = split.cols();
  for (auto j : features) {
    for (std::size_t r = 0; r < split.rows(); ++r) values[r * d + j] += delta;
  }
  return rebuild(split, std::move(values));
}

ModelPairData make_model_pair(const FeatureMatrix& stream, const ScenarioSpec& spec,
                              std::uint64_t seed) {
  if (!stream.has_labels()) throw std::invalid_argument("model pair needs a labeled stream");
  auto split = split_at_random_point(stream, derive_seed(seed, stream::kSplitPoint));
  auto features = choose_features(spec, stream.cols(), derive_seed(seed, stream::kFeatureChoice));
  const auto perturb_seed = derive_seed(seed, stream::kPerturb);
  FeatureMatrix perturbed = [&] {
    switch (spec.kind) {
      case DriftKind::Noise:
        return perturb_noise(split.second, features, spec.sigma, perturb_seed);
      case DriftKind::Permutation:
        return perturb_permutation(split.second, features, perturb_seed);
      case DriftKind::Shift:
        break;
    }
    return perturb_shift(split.second, features, spec.delta);
  }();
  FeatureMatrix x_g = concat_rows(split.first, perturbed);
  return {std::move(split.first), std::move(x_g), std::move(features), split.index};
}

}  // namespace modeldiff
