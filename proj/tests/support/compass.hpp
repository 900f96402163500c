#pragma once

// Compass (coordinate pattern) search: a deliberately simple
// derivative-free minimizer, written separately from the production
// simplex so fit oracles stay independent of the implementation path.

#include <functional>

#include <Eigen/Dense>

namespace oracle {

struct CompassResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  long evaluations = 0;
};

inline CompassResult compass_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                                      Eigen::VectorXd x, double step = 0.5, double step_tol = 1e-9,
                                      long max_evaluations = 2000000) {
  CompassResult result;
  double fx = objective(x);
  ++result.evaluations;
  while (step > step_tol && result.evaluations < max_evaluations) {
    bool improved = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd trial = x;
        trial[i] += sign * step;
        const double ft = objective(trial);
        ++result.evaluations;
        if (ft < fx) {
          x = trial;
          fx = ft;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  result.x = x;
  result.fx = fx;
  return result;
}

}  // namespace oracle
