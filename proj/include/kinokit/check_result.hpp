#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kinokit/numerics.hpp"
#include "kinokit/profile.hpp"

namespace kinokit {

struct CheckResult {
  std::string check_id;
  ModelParams params;
  std::string profile_hash;
  std::map<std::string, double> coords;     ///< sweep coordinates (v0, r, rho, alpha, q, ...)
  std::map<std::string, double> constants;  ///< measured constants by name
  std::map<std::string, FitResult> fits;    ///< fitted exponents by name
  std::map<std::string, std::vector<std::pair<double, double>>> series;  ///< plot data, x ascending
  std::map<std::string, std::string> series_axis;  ///< x-axis label per series
  std::map<std::string, double> tolerance;
  std::vector<std::string> witness;
  std::vector<std::string> errors;
  bool pass = false;
};

}  // namespace kinokit
