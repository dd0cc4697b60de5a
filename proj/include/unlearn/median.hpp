#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/mechanism.hpp"

namespace unlearn {

/// Scalar sample with every value in [0, B].
struct ScalarSample {
  std::vector<double> values;
  double bound_B = 1.0;

  void validate() const {
    if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
    for (double v : values) {
      if (!(v >= 0.0 && v <= bound_B)) throw DataError("sample value outside [0, B]");
    }
  }
};

/// Median of an already sorted range; midpoint rule for even length.
inline double median_of_sorted(const std::vector<double>& sorted) {
  if (sorted.empty()) throw DataError("median of an empty sample");
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return std::midpoint(sorted[n / 2 - 1], sorted[n / 2]);
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return median_of_sorted(values);
}

inline double median(const ScalarSample& sample) { return median(sample.values); }

/// Retain sensitivity of the median for odd n >= 3:
/// half the larger of the two spacings around the middle order statistic.
/// The half-gaps are evaluated as midpoint shifts so the value is bit-equal to
/// recomputing the median after the worst-case addition.
inline SensitivityReport rs_median(const ScalarSample& sample) {
  sample.validate();
  const std::size_t n = sample.values.size();
  if (n < 3 || n % 2 == 0) {
    throw ConfigError("rs_median needs an odd sample of size >= 3; use oracle_rs_median for even n");
  }
  std::vector<double> x = sample.values;
  std::sort(x.begin(), x.end());
  const std::size_t m = n / 2;  // zero-based index of x_(m)
  const double upper_gap = x[m + 1] - x[m];
  const double lower_gap = x[m] - x[m - 1];
  const double up_shift = std::midpoint(x[m], x[m + 1]) - x[m];
  const double down_shift = x[m] - std::midpoint(x[m - 1], x[m]);
  return SensitivityReport::make(std::max(up_shift, down_shift), SensitivityKind::retain,
                                 "rs_median",
                                 {{"n", static_cast<double>(n)},
                                  {"upper_gap", upper_gap},
                                  {"lower_gap", lower_gap},
                                  {"B", sample.bound_B}});
}

/// Global sensitivity of the median on [0, B]: B / 2.
inline SensitivityReport gs_median(double bound_B) {
  if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
  return SensitivityReport::make(bound_B / 2.0, SensitivityKind::global, "gs_median",
                                 {{"B", bound_B}});
}

/// Brute force: add every point of a uniform grid on [0, B] (plus the sample
/// points themselves), recompute the median and keep the largest move.
inline SensitivityReport oracle_rs_median(const ScalarSample& sample, int grid_points) {
  sample.validate();
  if (grid_points < 3) throw ConfigError("oracle grid needs at least 3 points");
  if (sample.values.empty()) throw DataError("median of an empty sample");
  std::vector<double> sorted = sample.values;
  std::sort(sorted.begin(), sorted.end());
  const double base = median_of_sorted(sorted);

  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(grid_points) + sorted.size());
  for (int i = 0; i < grid_points; ++i) {
    candidates.push_back(i == grid_points - 1
                             ? sample.bound_B
                             : sample.bound_B * static_cast<double>(i) / (grid_points - 1));
  }
  candidates.insert(candidates.end(), sorted.begin(), sorted.end());

  std::vector<double> augmented(sorted.size() + 1);
  double worst = 0.0;
  for (double c : candidates) {
    const auto pos = std::upper_bound(sorted.begin(), sorted.end(), c);
    auto out = std::copy(sorted.begin(), pos, augmented.begin());
    *out++ = c;
    std::copy(pos, sorted.end(), out);
    worst = std::max(worst, std::abs(median_of_sorted(augmented) - base));
  }
  return SensitivityReport::make(worst, SensitivityKind::oracle, "oracle_rs_median",
                                 {{"n", static_cast<double>(sorted.size())},
                                  {"grid_points", static_cast<double>(grid_points)}});
}

}  // namespace unlearn
