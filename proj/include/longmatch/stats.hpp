#pragma once

#include <span>

namespace longmatch {

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

/// Sample variance with the n-1 denominator, two-pass compensated.
double sample_variance(std::span<const double> xs, double mean_value);
double sample_std_dev(std::span<const double> xs, double mean_value);

/// Empirical quantile, R type-7 (linear interpolation between order
/// statistics). `sorted` must be ascending and non-empty, q in [0, 1].
double percentile_sorted(std::span<const double> sorted, double q);

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (inverse CDF), Wichura's AS 241 PPND16,
/// accurate to ~1e-15 over (0, 1).
double normal_quantile(double p);

}  // namespace longmatch
