#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace goikit::stats {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log10(y) = slope * log10(x) + intercept.
/// Throws ContractError on fewer than two points or non-positive data.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Empirical quantile, linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace goikit::stats
