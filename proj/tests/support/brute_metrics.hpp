#pragma once

// Brute-force metric oracles. Deliberately independent of the library
// fast paths: every rate is a full counting loop and every threshold is
// found by scanning the whole candidate grid.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

inline double tail_fraction(const std::vector<double>& xs, double t) {
  std::size_t count = 0;
  for (double x : xs) {
    if (x >= t) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(xs.size());
}

struct Pick {
  double threshold = 0.0;
  double achieved = 0.0;
  bool warning = false;
};

// Smallest threshold in {-inf} u distinct(calibration) u {just above max}
// whose >= tail fraction is <= target.
inline Pick pick_threshold(const std::vector<double>& calibration, double target) {
  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  std::vector<double> sorted = calibration;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  candidates.insert(candidates.end(), sorted.begin(), sorted.end());
  const double above =
      std::nextafter(sorted.back(), std::numeric_limits<double>::infinity());
  for (double t : candidates) {
    const double rate = tail_fraction(calibration, t);
    if (rate <= target) return Pick{t, rate, false};
  }
  return Pick{above, tail_fraction(calibration, above),
              target < 1.0 / static_cast<double>(calibration.size())};
}

struct OperatingPoint {
  double threshold = 0.0;
  double tar = 0.0;
  double achieved_far = 0.0;
  bool warning = false;
};

inline OperatingPoint operating_point(const std::vector<double>& genuine,
                                      const std::vector<double>& impostor, double far_target) {
  const Pick pick = pick_threshold(impostor, far_target);
  return OperatingPoint{pick.threshold, tail_fraction(genuine, pick.threshold), pick.achieved,
                        pick.warning};
}

// One mated probe for the open-set oracle: the mate's score plus every
// nonmate gallery score.
struct MatedProbe {
  double mate_score = 0.0;
  std::vector<double> nonmate_scores;
};

struct DirOutcome {
  double threshold = 0.0;
  double fpir = 0.0;
  double dir = 0.0;
  bool warning = false;
};

inline DirOutcome dir_at(const std::vector<MatedProbe>& mated,
                         const std::vector<double>& nonmated_max, int rank, double far_target) {
  Pick pick;
  if (far_target >= 1.0) {
    pick = Pick{-std::numeric_limits<double>::infinity(), 1.0, false};
  } else {
    pick = pick_threshold(nonmated_max, far_target);
  }
  std::size_t hits = 0;
  for (const MatedProbe& probe : mated) {
    std::size_t beaten_by = 0;
    for (double s : probe.nonmate_scores) {
      if (s >= probe.mate_score) ++beaten_by;
    }
    const std::size_t probe_rank = beaten_by + 1;
    if (probe_rank <= static_cast<std::size_t>(rank) && probe.mate_score >= pick.threshold) {
      ++hits;
    }
  }
  return DirOutcome{pick.threshold, pick.achieved,
                    static_cast<double>(hits) / static_cast<double>(mated.size()), pick.warning};
}

}  // namespace oracle
