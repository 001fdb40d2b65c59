#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "drhmc/errors.hpp"

namespace drhmc::models {

// Location-vector strategy for a block, selected per experiment:
// zero, a fixed data-derived vector, the approximate conditional mean,
// or a model-specific choice.
enum class HStrategy {
  kZero,
  kFixedData,
  kConditionalMean,
  kModelCustom,
};

inline const char* to_string(HStrategy h) {
  switch (h) {
    case HStrategy::kZero: return "zero";
    case HStrategy::kFixedData: return "fixed";
    case HStrategy::kConditionalMean: return "mean";
    case HStrategy::kModelCustom: return "custom";
  }
  return "?";
}

// Loads a one-column observation series; a non-numeric first line is
// treated as a header.
inline std::vector<double> load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open data file: " + path);
  std::vector<double> series;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v;
    if (ss >> v) {
      series.push_back(v);
    } else if (!first) {
      throw InvalidArgument("non-numeric entry in data file: " + line);
    }
    first = false;
  }
  if (series.empty()) throw InvalidArgument("data file holds no values: " + path);
  return series;
}

}  // namespace drhmc::models
