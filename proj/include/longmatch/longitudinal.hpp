#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "longmatch/lmm.hpp"

namespace longmatch {

/// Region around the population-mean line containing `coverage` of the
/// subject trend lines: mean(t) +- z * sqrt(var0 + 2 cov t + var1 t^2),
/// z two-sided. Residual scatter is excluded unless include_residual.
struct TrendBand {
  double intercept = 0.0;
  double slope = 0.0;
  double var_intercept = 0.0;
  double var_slope = 0.0;
  double cov = 0.0;
  double residual_var = 0.0;
  bool include_residual = false;
  double coverage = 0.0;
  double z = 0.0;

  double mean_at(double t) const { return intercept + slope * t; }
  double trend_variance_at(double t) const {
    return var_intercept + 2.0 * cov * t + var_slope * t * t +
           (include_residual ? residual_var : 0.0);
  }
  double half_width_at(double t) const;
};

TrendBand make_trend_band(const LmmFit& fit, double coverage,
                          std::optional<Gender> gender = std::nullopt,
                          bool include_residual = false);

struct BandPoint {
  double t = 0.0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

std::vector<BandPoint> population_band(const LmmFit& fit, double coverage,
                                       std::span<const double> grid,
                                       std::optional<Gender> gender = std::nullopt,
                                       bool include_residual = false);

struct CrossingResult {
  double threshold = 0.0;           // standardized-score units
  double population_fraction = 0.0;
  double horizon = 0.0;
  std::optional<double> crossing_time;  // empty: no crossing on (0, horizon]
  bool below_at_start = false;          // quantile already <= threshold at t = 0
};

/// Earliest t in (0, horizon] where the one-sided lower population
/// quantile mean(t) - z_q * sqrt(trend variance) reaches the threshold,
/// bracketed on a scan grid and bisected to 1e-4 years.
CrossingResult crossing_time(const LmmFit& fit, double threshold, double population_fraction,
                             double horizon = 50.0, std::optional<Gender> gender = std::nullopt,
                             bool include_residual = false);

/// Years until the population-mean trend drops one standard deviation of
/// the (standardized) score distribution: 1 / |gamma10|, gamma10 < 0.
double one_sd_time(const LmmFit& fit);

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t master_seed = 0;
  double interval_level = 0.95;
  /// Re-standardize responses inside each replicate instead of reusing the
  /// dataset-level standardization.
  bool restandardize = false;
  int threads = 1;  // <= 1 is the serial reference path
  FitOptions fit;
};

struct BootstrapResult {
  int n_replicates = 0;
  std::uint64_t master_seed = 0;
  double interval_level = 0.95;
  std::vector<std::string> parameter_names;
  /// Row r = replicate r, deterministic by index regardless of threading.
  Eigen::MatrixXd replicate_values;
  std::vector<std::uint8_t> replicate_converged;
  std::vector<std::uint8_t> replicate_boundary;
  int n_nonconverged = 0;
  /// Means and percentile bounds over the converged replicates.
  Eigen::VectorXd means;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Subject-level nonparametric bootstrap: each replicate draws n_subjects
/// subjects with replacement (duplicates become distinct clusters with
/// fresh random effects), refits, and records the parameters. Replicate r
/// uses the RandomStream seeded with derive_stream_seed(master_seed, r).
BootstrapResult bootstrap_fit(std::span<const LongitudinalObservation> observations, ModelKind kind,
                              const BootstrapOptions& options);

}  // namespace longmatch
