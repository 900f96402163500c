#include "longmatch/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "longmatch/simplex.hpp"

namespace longmatch {

const char* model_name(ModelKind kind) { return kind == ModelKind::bt ? "bt" : "c_gender"; }

int fixed_effects_dim(ModelKind kind) { return kind == ModelKind::bt ? 2 : 4; }

std::vector<SubjectDesign> build_design(std::span<const LongitudinalObservation> observations,
                                        ModelKind kind) {
  std::map<std::string, std::vector<const LongitudinalObservation*>> groups;
  for (const auto& obs : observations) {
    if (!(obs.delta_t > 0.0) || !std::isfinite(obs.delta_t)) {
      throw validation_error("observation for subject '" + obs.subject_id +
                             "' has non-positive delta_t");
    }
    if (!std::isfinite(obs.y_standardized)) {
      throw validation_error("observation for subject '" + obs.subject_id + "' has non-finite response");
    }
    if (kind == ModelKind::c_gender && !obs.gender.has_value()) {
      throw validation_error("gender model requested but subject '" + obs.subject_id +
                             "' has no gender");
    }
    groups[obs.subject_id].push_back(&obs);
  }

  const int p = fixed_effects_dim(kind);
  std::vector<SubjectDesign> design;
  design.reserve(groups.size());
  for (const auto& [subject_id, rows] : groups) {
    SubjectDesign sd;
    sd.subject_id = subject_id;
    const auto m = static_cast<Eigen::Index>(rows.size());
    sd.fixed.resize(m, p);
    sd.random.resize(m, 2);
    sd.response.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const LongitudinalObservation& obs = *rows[static_cast<std::size_t>(i)];
      if (obs.gender != rows.front()->gender) {
        throw validation_error("subject '" + subject_id + "' has inconsistent gender across observations");
      }
      const double dt = obs.delta_t;
      if (kind == ModelKind::bt) {
        sd.fixed(i, 0) = 1.0;
        sd.fixed(i, 1) = dt;
      } else {
        const double g = obs.gender == Gender::boy ? 1.0 : 0.0;
        sd.fixed(i, 0) = 1.0;
        sd.fixed(i, 1) = g;
        sd.fixed(i, 2) = dt;
        sd.fixed(i, 3) = g * dt;
      }
      sd.random(i, 0) = 1.0;
      sd.random(i, 1) = dt;
      sd.response(i) = obs.y_standardized;
    }
    design.push_back(std::move(sd));
  }
  return design;
}

double neg2_log_likelihood(std::span<const SubjectDesign> design, const Eigen::VectorXd& fixed_effects,
                           const RandomEffectsCovariance& ranef_cov, double residual_var) {
  if (design.empty()) throw validation_error("neg2_log_likelihood: empty design");
  if (!(residual_var > 0.0)) throw validation_error("neg2_log_likelihood: residual_var must be > 0");
  const double scale = std::max({std::abs(ranef_cov.var_intercept), std::abs(ranef_cov.var_slope), 1.0});
  if (!ranef_cov.is_psd(1e-12 * scale)) {
    throw validation_error("neg2_log_likelihood: random-effects covariance not PSD");
  }

  constexpr double kLog2Pi = 1.8378770664093454836;
  const Eigen::Matrix2d g = ranef_cov.matrix();
  double total = 0.0;
  for (const SubjectDesign& sd : design) {
    if (sd.fixed.cols() != fixed_effects.size()) {
      throw validation_error("neg2_log_likelihood: fixed-effects length does not match the design");
    }
    const Eigen::Index m = sd.response.size();
    Eigen::MatrixXd v = sd.random * g * sd.random.transpose();
    v.diagonal().array() += residual_var;
    const Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) {
      throw validation_error("neg2_log_likelihood: numerically singular marginal covariance");
    }
    const Eigen::VectorXd residual = sd.response - sd.fixed * fixed_effects;
    double log_det = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < m; ++i) log_det += 2.0 * std::log(l(i, i));
    total += static_cast<double>(m) * kLog2Pi + log_det + residual.dot(llt.solve(residual));
  }
  return total;
}

namespace {

// Per-subject sufficient statistics; the profiled deviance needs only
// these, so each objective evaluation is O(#subjects), independent of the
// observation counts.
struct SubjectStats {
  Eigen::Matrix2d ztz;
  Eigen::Matrix<double, 2, Eigen::Dynamic> ztx;
  Eigen::Vector2d zty;
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
  double yty = 0.0;
  Eigen::Index m = 0;
};

struct ProfiledModel {
  std::vector<SubjectStats> stats;
  Eigen::Index n_obs = 0;
  int p = 0;
  double response_mean_square = 0.0;

  explicit ProfiledModel(std::span<const SubjectDesign> design) {
    p = static_cast<int>(design.front().fixed.cols());
    stats.reserve(design.size());
    for (const SubjectDesign& sd : design) {
      SubjectStats s;
      s.ztz = sd.random.transpose() * sd.random;
      s.ztx = sd.random.transpose() * sd.fixed;
      s.zty = sd.random.transpose() * sd.response;
      s.xtx = sd.fixed.transpose() * sd.fixed;
      s.xty = sd.fixed.transpose() * sd.response;
      s.yty = sd.response.squaredNorm();
      s.m = sd.response.size();
      n_obs += s.m;
      response_mean_square += s.yty;
      stats.push_back(std::move(s));
    }
    response_mean_square /= static_cast<double>(n_obs);
  }

  struct Evaluation {
    double deviance = std::numeric_limits<double>::infinity();
    Eigen::VectorXd beta;
    double sigma_sq = 0.0;  // profiled residual variance
    double log_det_w = 0.0;
  };

  // theta is the lower triangle (l11, l21, l22) of Lambda with
  // G = sigma_sq * Lambda Lambda'. Sign symmetry lets us evaluate at
  // absolute diagonal values.
  Evaluation evaluate(const Eigen::Vector3d& theta, bool reml) const {
    Eigen::Matrix2d lambda;
    lambda << std::abs(theta[0]), 0.0, theta[1], std::abs(theta[2]);

    Eigen::MatrixXd s_xx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd s_xy = Eigen::VectorXd::Zero(p);
    double s_yy = 0.0;
    double log_det_w = 0.0;

    for (const SubjectStats& s : stats) {
      const Eigen::Matrix2d m2 =
          Eigen::Matrix2d::Identity() + lambda.transpose() * s.ztz * lambda;
      // 2x2 SPD (>= I): closed-form inverse via the determinant.
      const double det = m2(0, 0) * m2(1, 1) - m2(0, 1) * m2(1, 0);
      log_det_w += std::log(det);
      Eigen::Matrix2d m2_inv;
      m2_inv << m2(1, 1), -m2(0, 1), -m2(1, 0), m2(0, 0);
      m2_inv /= det;

      const Eigen::Matrix<double, 2, Eigen::Dynamic> u = lambda.transpose() * s.ztx;
      const Eigen::Vector2d w = lambda.transpose() * s.zty;
      s_xx.noalias() += s.xtx - u.transpose() * m2_inv * u;
      s_xy.noalias() += s.xty - u.transpose() * (m2_inv * w);
      s_yy += s.yty - w.dot(m2_inv * w);
    }

    Evaluation eval;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s_xx);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      eval.beta = ldlt.solve(s_xy);
    } else {
      eval.beta = s_xx.completeOrthogonalDecomposition().solve(s_xy);
    }
    if (!eval.beta.allFinite()) return eval;

    const double q = std::max(s_yy - s_xy.dot(eval.beta), 1e-250);
    const auto n = static_cast<double>(n_obs);
    constexpr double kLog2Pi = 1.8378770664093454836;
    if (!reml) {
      eval.sigma_sq = q / n;
      eval.deviance = log_det_w + n * (kLog2Pi + std::log(eval.sigma_sq) + 1.0);
    } else {
      const double dof = n - static_cast<double>(p);
      if (!(dof > 0.0)) return eval;
      eval.sigma_sq = q / dof;
      const double log_det_xx = std::log(s_xx.determinant());
      eval.deviance = log_det_w + log_det_xx + dof * (kLog2Pi + std::log(eval.sigma_sq) + 1.0);
    }
    eval.log_det_w = log_det_w;
    if (!std::isfinite(eval.deviance)) eval.deviance = std::numeric_limits<double>::infinity();
    return eval;
  }
};

}  // namespace

LmmFit fit_ml_design(std::span<const SubjectDesign> design, ModelKind kind, const FitOptions& options) {
  if (design.empty()) throw validation_error("fit_ml: no observations");
  for (const SubjectDesign& sd : design) {
    if (sd.response.size() == 0) throw validation_error("fit_ml: empty subject group");
    if (sd.fixed.cols() != fixed_effects_dim(kind)) {
      throw validation_error("fit_ml: design does not match the requested model");
    }
  }

  const ProfiledModel model(design);
  const auto objective = [&](const Eigen::VectorXd& theta) {
    return model.evaluate(Eigen::Vector3d(theta[0], theta[1], theta[2]), options.reml).deviance;
  };

  Eigen::VectorXd best_x(3);
  best_x << options.start[0], options.start[1], options.start[2];
  double best_f = objective(best_x);

  bool converged = false;
  int iterations_left = options.max_iter;
  double step = 0.25;
  for (int restart = 0; restart <= options.max_restarts && iterations_left > 0; ++restart) {
    SimplexOptions simplex_options;
    simplex_options.max_iterations = iterations_left;
    simplex_options.f_tol_rel = options.tol;
    simplex_options.initial_step = step;
    const SimplexResult result = nelder_mead(objective, best_x, simplex_options);
    iterations_left -= std::max(result.iterations, 1);
    const double improvement = best_f - result.fx;
    if (result.fx < best_f) {
      best_f = result.fx;
      best_x = result.x;
    }
    if (restart > 0 && result.converged &&
        improvement <= options.tol * (std::abs(best_f) + options.tol)) {
      converged = true;
      break;
    }
    step *= 0.2;
  }

  const Eigen::Vector3d theta(std::abs(best_x[0]), best_x[1], std::abs(best_x[2]));
  const ProfiledModel::Evaluation eval = model.evaluate(theta, options.reml);

  LmmFit fit;
  fit.model = kind;
  fit.gamma = eval.beta;
  fit.residual_var = eval.sigma_sq;
  fit.deviance = eval.deviance;
  fit.n_subjects = design.size();
  fit.n_observations = static_cast<std::size_t>(model.n_obs);
  fit.converged = converged && std::isfinite(eval.deviance);
  fit.theta = {theta[0], theta[1], theta[2]};

  // G = sigma^2 * Lambda Lambda'; PSD holds by construction and the
  // Cauchy-Schwarz bound cov^2 <= var0 * var1 is exact.
  const double l11 = theta[0], l21 = theta[1], l22 = theta[2];
  fit.ranef_cov.var_intercept = eval.sigma_sq * l11 * l11;
  fit.ranef_cov.cov = eval.sigma_sq * l11 * l21;
  fit.ranef_cov.var_slope = eval.sigma_sq * (l21 * l21 + l22 * l22);

  // Singular fits: a diagonal factor entry pinned at zero or the residual
  // variance collapsed to numerical zero (noiseless data).
  constexpr double kBoundaryTol = 1e-4;
  fit.boundary = l11 <= kBoundaryTol || l22 <= kBoundaryTol ||
                 eval.sigma_sq <= 1e-12 * std::max(model.response_mean_square, 1e-12);
  return fit;
}

LmmFit fit_ml(std::span<const LongitudinalObservation> observations, ModelKind kind,
              const FitOptions& options) {
  if (observations.empty()) throw validation_error("fit_ml: no observations");
  const std::vector<SubjectDesign> design = build_design(observations, kind);
  return fit_ml_design(design, kind, options);
}

double predict_population_mean(const LmmFit& fit, double delta_t, std::optional<Gender> gender) {
  if (fit.model == ModelKind::bt) {
    if (gender.has_value()) {
      throw validation_error("predict_population_mean: gender supplied for a time-lapse-only model");
    }
    return fit.gamma00() + fit.gamma10() * delta_t;
  }
  if (!gender.has_value()) {
    throw validation_error("predict_population_mean: gender required for the gender model");
  }
  const double g = *gender == Gender::boy ? 1.0 : 0.0;
  return fit.gamma00() + fit.gamma01() * g + (fit.gamma10() + fit.gamma11() * g) * delta_t;
}

}  // namespace longmatch
