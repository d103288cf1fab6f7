#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "modeldiff/data.hpp"

namespace testing {

// Test-side RNG; deliberately not the library's helpers.
inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline std::vector<std::string> names(std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

// Values drawn from a small grid so that ties and duplicate rows occur.
inline modeldiff::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                              bool labeled = true, int grid = 0) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(rows * cols);
  for (auto& x : v) {
    if (grid > 0) {
      x = static_cast<double>(rng() % static_cast<std::uint64_t>(grid));
    } else {
      x = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    }
  }
  std::optional<modeldiff::Labels> labels;
  if (labeled) {
    labels.emplace(rows);
    for (auto& y : *labels) y = static_cast<int>(rng() % 2);
  }
  return modeldiff::FeatureMatrix(names(cols), std::move(v), std::move(labels));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("modeldiff_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path_ / name; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name, std::ios::binary) << content;
    return path_ / name;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
