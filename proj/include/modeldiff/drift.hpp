#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modeldiff/data.hpp"

namespace modeldiff {

// AGRAWAL loan-approval stream restricted to its numeric attributes
// (car make and zipcode are categorical and omitted).
//
// Columns, in order: salary, commission, age, education level, house value,
// house years, loan.
//
//   salary      ~ U[20000, 150000]
//   commission  = 0 if salary >= 75000, else U[10000, 75000]
//   age         ~ U{20..80}
//   elevel      ~ U{0..4}
//   hvalue      = (9 - zipcode) * 100000 * U[0.5, 1.5],  zipcode ~ U{0..8}
//   hyears      ~ U{1..30}
//   loan        ~ U[0, 500000]
//
// function_id 1..3 selects the classification function (age; age x salary;
// age x education level).
namespace agrawal {

inline constexpr std::size_t kSalary = 0;
inline constexpr std::size_t kCommission = 1;
inline constexpr std::size_t kAge = 2;
inline constexpr std::size_t kEducation = 3;
inline constexpr std::size_t kHouseValue = 4;
inline constexpr std::size_t kHouseYears = 5;
inline constexpr std::size_t kLoan = 6;

std::vector<std::string> feature_names();

// Label of one generated row (in feature units) under function_id.
int classify(int function_id, std::span<const double> row);

}  // namespace agrawal

FeatureMatrix agrawal_generate(std::size_t n, int function_id, std::uint64_t seed);

enum class DriftKind { Noise, Permutation, Shift };

std::string to_string(DriftKind kind);
// Accepts s1/s2/s3 and noise/permute/permutation/shift (case-insensitive).
DriftKind parse_drift_kind(const std::string& text);
// "S1", "S2", "S3".
std::string scenario_label(DriftKind kind);

struct ScenarioSpec {
  DriftKind kind = DriftKind::Shift;
  double sigma = 0.5;  // Noise only, scaled units
  double delta = 2.0;  // Shift only, scaled units
  // Fixed number of perturbed features; unset draws a uniform count from
  // [1, d] (noise, permutation) or [2, d] (shift).
  std::optional<std::size_t> num_features;

  // Throws std::invalid_argument on sigma <= 0, delta == 0, or a fixed count
  // outside the admissible range for d features.
  void validate(std::size_t d) const;
};

// Uniform count (range depends on the scenario kind), then a uniform subset of
// that size, returned sorted.
std::vector<std::size_t> choose_features(const ScenarioSpec& spec, std::size_t d,
                                         std::uint64_t seed);

FeatureMatrix perturb_noise(const FeatureMatrix& split, std::span<const std::size_t> features,
                            double sigma, std::uint64_t seed);
FeatureMatrix perturb_permutation(const FeatureMatrix& split,
                                  std::span<const std::size_t> features, std::uint64_t seed);
FeatureMatrix perturb_shift(const FeatureMatrix& split, std::span<const std::size_t> features,
                            double delta);

struct ModelPairData {
  FeatureMatrix x_f;  // labeled: y_f
  FeatureMatrix x_g;  // labeled: y_g
  std::vector<std::size_t> perturbed_features;
  std::size_t split_index = 0;
};

// Splits the (standardized, labeled) stream at a random point, perturbs the
// second part and returns X_f = first, X_g = first ++ perturbed(second).
ModelPairData make_model_pair(const FeatureMatrix& stream, const ScenarioSpec& spec,
                              std::uint64_t seed);

}  // namespace modeldiff
