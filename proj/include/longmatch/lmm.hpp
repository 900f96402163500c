#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "longmatch/dataset.hpp"

namespace longmatch {

// Two-level linear mixed-effects model for standardized genuine scores:
//   Y_ij = (g00 [+ g01*Gender_i]) + (g10 [+ g11*Gender_i]) * dT_ij
//          + b0_i + b1_i * dT_ij + eps_ij,
//   (b0, b1) ~ N(0, G),  eps ~ N(0, residual_var).
// `bt` uses time lapse only; `c_gender` adds the gender main effect and
// the gender x time interaction.

enum class ModelKind { bt, c_gender };

const char* model_name(ModelKind kind);
int fixed_effects_dim(ModelKind kind);  // bt: 2, c_gender: 4

/// One subject's stacked design: fixed-effect rows, random-effect rows
/// [1, dt], and responses, in observation order.
struct SubjectDesign {
  std::string subject_id;
  Eigen::MatrixXd fixed;                             // m x p
  Eigen::Matrix<double, Eigen::Dynamic, 2> random;   // m x 2
  Eigen::VectorXd response;                          // m
};

/// Groups observations by subject (sorted by subject_id). Fixed-effect
/// columns: bt -> [1, dt]; c_gender -> [1, gender, dt, gender*dt].
std::vector<SubjectDesign> build_design(std::span<const LongitudinalObservation> observations,
                                        ModelKind kind);

struct RandomEffectsCovariance {
  double var_intercept = 0.0;  // sigma0^2
  double var_slope = 0.0;      // sigma1^2
  double cov = 0.0;            // sigma01

  Eigen::Matrix2d matrix() const {
    Eigen::Matrix2d g;
    g << var_intercept, cov, cov, var_slope;
    return g;
  }
  bool is_psd(double tol = 0.0) const {
    return var_intercept >= -tol && var_slope >= -tol &&
           cov * cov <= var_intercept * var_slope + tol;
  }
};

/// -2 log marginal likelihood: per subject, V = Z G Z' + residual_var I and
/// the value is sum_i [ m_i log(2 pi) + log|V_i| + r_i' V_i^-1 r_i ].
double neg2_log_likelihood(std::span<const SubjectDesign> design, const Eigen::VectorXd& fixed_effects,
                           const RandomEffectsCovariance& ranef_cov, double residual_var);

struct FitOptions {
  int max_iter = 2000;   // simplex iterations across all restarts
  double tol = 1e-8;     // relative deviance change declaring convergence
  /// Start for the scaled factor L of G = residual_var * L L' (row-major
  /// lower triangle: l11, l21, l22).
  std::array<double, 3> start{0.5, 0.0, 0.5};
  int max_restarts = 4;
  bool reml = false;     // ML is the default and the tested path
};

struct LmmFit {
  ModelKind model = ModelKind::bt;
  /// Design-column order: bt [g00, g10]; c_gender [g00, g01, g10, g11].
  Eigen::VectorXd gamma;
  RandomEffectsCovariance ranef_cov;
  double residual_var = 0.0;
  double deviance = 0.0;  // -2 log likelihood at the optimum (ML criterion)
  std::size_t n_subjects = 0;
  std::size_t n_observations = 0;
  bool converged = false;
  bool boundary = false;  // singular fit: a variance ratio at the zero bound
  std::array<double, 3> theta{};  // fitted factor, diagnostics

  double gamma00() const { return gamma[0]; }
  double gamma10() const { return model == ModelKind::bt ? gamma[1] : gamma[2]; }
  double gamma01() const { return gamma[1]; }  // c_gender only
  double gamma11() const { return gamma[3]; }  // c_gender only
};

/// Maximum-likelihood fit. The deviance is minimized over the scaled
/// Cholesky factor of G with the fixed effects and the residual variance
/// profiled out analytically; Nelder-Mead with restarts drives the factor.
/// Non-convergence returns the best point found with converged = false.
LmmFit fit_ml(std::span<const LongitudinalObservation> observations, ModelKind kind,
              const FitOptions& options = {});

/// Same fit on a pre-built grouped design (bootstrap path: resampled
/// subjects enter as distinct clusters).
LmmFit fit_ml_design(std::span<const SubjectDesign> design, ModelKind kind,
                     const FitOptions& options = {});

/// Fixed-effects linear predictor at the covariate values. Gender is
/// required for c_gender fits and rejected for bt fits.
double predict_population_mean(const LmmFit& fit, double delta_t,
                               std::optional<Gender> gender = std::nullopt);

}  // namespace longmatch
