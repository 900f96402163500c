#include "longmatch/longitudinal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "longmatch/parallel.hpp"
#include "longmatch/rng.hpp"
#include "longmatch/stats.hpp"

namespace longmatch {

double TrendBand::half_width_at(double t) const {
  const double variance = trend_variance_at(t);
  return z * std::sqrt(std::max(variance, 0.0));
}

TrendBand make_trend_band(const LmmFit& fit, double coverage, std::optional<Gender> gender,
                          bool include_residual) {
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw validation_error("trend band coverage must be in (0, 1)");
  }
  TrendBand band;
  band.intercept = predict_population_mean(fit, 0.0, gender);
  band.slope = predict_population_mean(fit, 1.0, gender) - band.intercept;
  band.var_intercept = fit.ranef_cov.var_intercept;
  band.var_slope = fit.ranef_cov.var_slope;
  band.cov = fit.ranef_cov.cov;
  band.residual_var = fit.residual_var;
  band.include_residual = include_residual;
  band.coverage = coverage;
  band.z = normal_quantile(0.5 + coverage / 2.0);
  return band;
}

std::vector<BandPoint> population_band(const LmmFit& fit, double coverage,
                                       std::span<const double> grid, std::optional<Gender> gender,
                                       bool include_residual) {
  const TrendBand band = make_trend_band(fit, coverage, gender, include_residual);
  std::vector<BandPoint> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (!(t >= 0.0)) throw validation_error("band grid values must be >= 0");
    const double m = band.mean_at(t);
    const double h = band.half_width_at(t);
    out.push_back(BandPoint{t, m, m - h, m + h});
  }
  return out;
}

CrossingResult crossing_time(const LmmFit& fit, double threshold, double population_fraction,
                             double horizon, std::optional<Gender> gender, bool include_residual) {
  if (!(population_fraction > 0.0 && population_fraction < 1.0)) {
    throw validation_error("population fraction must be in (0, 1)");
  }
  if (!(horizon > 0.0)) throw validation_error("horizon must be positive");

  // One-sided: the stated fraction of subject trends lies above
  // mean(t) - z_q * sd(t).
  TrendBand band;
  band.intercept = predict_population_mean(fit, 0.0, gender);
  band.slope = predict_population_mean(fit, 1.0, gender) - band.intercept;
  band.var_intercept = fit.ranef_cov.var_intercept;
  band.var_slope = fit.ranef_cov.var_slope;
  band.cov = fit.ranef_cov.cov;
  band.residual_var = fit.residual_var;
  band.include_residual = include_residual;
  band.z = normal_quantile(population_fraction);

  const auto quantile_minus_threshold = [&](double t) {
    return band.mean_at(t) - band.half_width_at(t) - threshold;
  };

  CrossingResult result;
  result.threshold = threshold;
  result.population_fraction = population_fraction;
  result.horizon = horizon;

  if (quantile_minus_threshold(0.0) <= 0.0) {
    result.crossing_time = 0.0;
    result.below_at_start = true;
    return result;
  }

  // Scan for the first sign change, then bisect to 1e-4 years.
  const double step = std::min(0.05, horizon / 1000.0);
  double lo = 0.0;
  double hi = 0.0;
  bool bracketed = false;
  for (double t = step; t < horizon + step; t += step) {
    const double clamped = std::min(t, horizon);
    if (quantile_minus_threshold(clamped) <= 0.0) {
      hi = clamped;
      bracketed = true;
      break;
    }
    lo = clamped;
    if (clamped >= horizon) break;
  }
  if (!bracketed) return result;

  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    if (quantile_minus_threshold(mid) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.crossing_time = 0.5 * (lo + hi);
  return result;
}

double one_sd_time(const LmmFit& fit) {
  const double slope = fit.gamma10();
  if (!(slope < 0.0)) {
    throw validation_error("one_sd_time undefined: population slope is not negative");
  }
  return 1.0 / std::abs(slope);
}

namespace {

struct SubjectObservations {
  std::string subject_id;
  std::optional<Gender> gender;
  std::vector<std::pair<double, double>> rows;  // (delta_t, y)
};

std::vector<SubjectObservations> group_by_subject(std::span<const LongitudinalObservation> observations) {
  std::map<std::string, SubjectObservations> groups;
  for (const auto& obs : observations) {
    auto [it, inserted] = groups.try_emplace(obs.subject_id);
    if (inserted) {
      it->second.subject_id = obs.subject_id;
      it->second.gender = obs.gender;
    }
    it->second.rows.emplace_back(obs.delta_t, obs.y_standardized);
  }
  std::vector<SubjectObservations> out;
  out.reserve(groups.size());
  for (auto& [id, group] : groups) out.push_back(std::move(group));
  return out;
}

std::vector<std::string> parameter_names_for(ModelKind kind) {
  std::vector<std::string> names;
  if (kind == ModelKind::bt) {
    names = {"gamma00", "gamma10"};
  } else {
    names = {"gamma00", "gamma01", "gamma10", "gamma11"};
  }
  names.insert(names.end(), {"var_intercept", "var_slope", "cov_intercept_slope", "residual_var"});
  return names;
}

}  // namespace

BootstrapResult bootstrap_fit(std::span<const LongitudinalObservation> observations, ModelKind kind,
                              const BootstrapOptions& options) {
  if (options.replicates < 1) throw validation_error("bootstrap: replicates must be >= 1");
  if (!(options.interval_level > 0.0 && options.interval_level < 1.0)) {
    throw validation_error("bootstrap: interval level must be in (0, 1)");
  }
  const std::vector<SubjectObservations> subjects = group_by_subject(observations);
  if (subjects.size() < 2) {
    throw validation_error("bootstrap: need at least 2 subjects with longitudinal observations");
  }

  const std::vector<std::string> names = parameter_names_for(kind);
  const auto n_params = static_cast<Eigen::Index>(names.size());
  const int fixed_dim = fixed_effects_dim(kind);

  BootstrapResult result;
  result.n_replicates = options.replicates;
  result.master_seed = options.master_seed;
  result.interval_level = options.interval_level;
  result.parameter_names = names;
  result.replicate_values.resize(options.replicates, n_params);
  result.replicate_converged.assign(static_cast<std::size_t>(options.replicates), 0);
  result.replicate_boundary.assign(static_cast<std::size_t>(options.replicates), 0);

  // One design block per subject, built once; replicates assemble copies,
  // so a subject drawn twice enters as two distinct clusters.
  std::vector<SubjectDesign> base_blocks;
  base_blocks.reserve(subjects.size());
  {
    std::vector<LongitudinalObservation> flat;
    for (const auto& subject : subjects) {
      flat.clear();
      for (const auto& [dt, y] : subject.rows) {
        flat.push_back(LongitudinalObservation{subject.subject_id, dt, y, subject.gender});
      }
      auto block = build_design(flat, kind);
      base_blocks.push_back(std::move(block.front()));
    }
  }

  const auto run_replicate = [&](std::size_t r) {
    RandomStream stream(derive_stream_seed(options.master_seed, r));
    const std::size_t n = subjects.size();

    std::vector<SubjectDesign> design;
    design.reserve(n);
    for (std::size_t draw = 0; draw < n; ++draw) {
      design.push_back(base_blocks[stream.below(n)]);
    }

    // A degenerate replicate (for instance zero response dispersion under
    // restandardization) counts as non-converged, never as a crash.
    try {
      if (options.restandardize) {
        std::vector<double> ys;
        for (const auto& block : design) {
          for (Eigen::Index i = 0; i < block.response.size(); ++i) ys.push_back(block.response[i]);
        }
        const auto params = standardize_genuine(ys).first;
        for (auto& block : design) {
          block.response = (block.response.array() - params.mean) / params.std_dev;
        }
      }

      const LmmFit fit = fit_ml_design(design, kind, options.fit);
      Eigen::VectorXd row(n_params);
      for (int i = 0; i < fixed_dim; ++i) row[i] = fit.gamma[i];
      row[fixed_dim + 0] = fit.ranef_cov.var_intercept;
      row[fixed_dim + 1] = fit.ranef_cov.var_slope;
      row[fixed_dim + 2] = fit.ranef_cov.cov;
      row[fixed_dim + 3] = fit.residual_var;
      result.replicate_values.row(static_cast<Eigen::Index>(r)) = row;
      result.replicate_converged[r] = fit.converged ? 1 : 0;
      result.replicate_boundary[r] = fit.boundary ? 1 : 0;
    } catch (const validation_error&) {
      result.replicate_values.row(static_cast<Eigen::Index>(r))
          .setConstant(std::numeric_limits<double>::quiet_NaN());
      result.replicate_converged[r] = 0;
      result.replicate_boundary[r] = 1;
    }
  };

  parallel_for(static_cast<std::size_t>(options.replicates), options.threads, run_replicate);

  for (const auto flag : result.replicate_converged) {
    if (flag == 0) ++result.n_nonconverged;
  }

  result.means = Eigen::VectorXd::Zero(n_params);
  result.lower = Eigen::VectorXd::Zero(n_params);
  result.upper = Eigen::VectorXd::Zero(n_params);
  const double alpha = 1.0 - options.interval_level;
  std::vector<double> column;
  for (Eigen::Index pi = 0; pi < n_params; ++pi) {
    column.clear();
    for (int r = 0; r < options.replicates; ++r) {
      if (result.replicate_converged[static_cast<std::size_t>(r)] != 0) {
        column.push_back(result.replicate_values(r, pi));
      }
    }
    if (column.empty()) continue;  // all replicates non-converged; reported via counts
    result.means[pi] = mean(column);
    std::sort(column.begin(), column.end());
    result.lower[pi] = percentile_sorted(column, alpha / 2.0);
    result.upper[pi] = percentile_sorted(column, 1.0 - alpha / 2.0);
  }
  return result;
}

}  // namespace longmatch
