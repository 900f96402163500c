#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace longmatch {

struct SimplexOptions {
  int max_iterations = 2000;
  double f_tol_rel = 1e-10;   // stop when the simplex function spread collapses
  double initial_step = 0.25; // per-coordinate offset building the first simplex
};

struct SimplexResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead downhill simplex (reflection 1, expansion 2, contraction
/// 0.5, shrink 0.5). Deterministic given (objective, start, options).
inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                                 const Eigen::VectorXd& start, const SimplexOptions& options = {}) {
  const int n = static_cast<int>(start.size());
  std::vector<Eigen::VectorXd> verts;
  std::vector<double> fvals;
  verts.reserve(n + 1);
  verts.push_back(start);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = start;
    v[i] += options.initial_step != 0.0 ? options.initial_step : 0.25;
    verts.push_back(v);
  }
  for (const auto& v : verts) fvals.push_back(objective(v));

  std::vector<int> order(verts.size());
  SimplexResult result;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fvals[a] < fvals[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[order.size() - 2];

    const double spread = std::abs(fvals[worst] - fvals[best]);
    if (spread <= options.f_tol_rel * (std::abs(fvals[best]) + options.f_tol_rel)) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i : order) {
      if (i != worst) centroid += verts[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - verts[worst]);
    const double f_reflected = objective(reflected);
    if (f_reflected < fvals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - verts[worst]);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        verts[worst] = expanded;
        fvals[worst] = f_expanded;
      } else {
        verts[worst] = reflected;
        fvals[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < fvals[second_worst]) {
      verts[worst] = reflected;
      fvals[worst] = f_reflected;
      continue;
    }
    const Eigen::VectorXd contracted = centroid + 0.5 * (verts[worst] - centroid);
    const double f_contracted = objective(contracted);
    if (f_contracted < fvals[worst]) {
      verts[worst] = contracted;
      fvals[worst] = f_contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (int i : order) {
      if (i == best) continue;
      verts[i] = verts[best] + 0.5 * (verts[i] - verts[best]);
      fvals[i] = objective(verts[i]);
    }
  }

  const auto best_it = std::min_element(fvals.begin(), fvals.end());
  result.x = verts[static_cast<std::size_t>(best_it - fvals.begin())];
  result.fx = *best_it;
  result.iterations = iter;
  return result;
}

}  // namespace longmatch
