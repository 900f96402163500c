#include "longmatch/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace longmatch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// #{x in sorted >= t} / n with the >= convention.
double tail_rate(std::span<const double> sorted, double t) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

}  // namespace

ThresholdPick threshold_at_rate(std::span<const double> sorted_scores, double target_rate) {
  if (sorted_scores.empty()) throw validation_error("threshold_at_rate: empty calibration set");
  if (!(target_rate > 0.0 && target_rate <= 1.0)) {
    throw validation_error("threshold_at_rate: target rate must be in (0, 1]");
  }
  const auto n = static_cast<double>(sorted_scores.size());

  if (target_rate >= 1.0) return ThresholdPick{kNegInf, 1.0, false};

  // rate(sorted[i]) = (n - i) / n is non-increasing in i; the smallest
  // qualifying threshold is the first index with rate <= target, skipping
  // duplicates of the previous value (their rate is measured at the first
  // occurrence).
  const auto size = sorted_scores.size();
  for (std::size_t i = 0; i < size; ++i) {
    if (i > 0 && sorted_scores[i] == sorted_scores[i - 1]) continue;
    const auto at_or_above = static_cast<double>(size - i);
    if (at_or_above / n <= target_rate) {
      return ThresholdPick{sorted_scores[i], at_or_above / n, false};
    }
  }
  // No observed score qualifies; step just above the maximum (rate 0).
  const double above = std::nextafter(sorted_scores.back(), std::numeric_limits<double>::infinity());
  return ThresholdPick{above, 0.0, target_rate < 1.0 / n};
}

RocCurve::RocCurve(std::vector<double> genuine, std::vector<double> impostor)
    : genuine_(std::move(genuine)), impostor_(std::move(impostor)) {
  if (genuine_.empty()) throw validation_error("build_roc: empty genuine score list");
  if (impostor_.empty()) throw validation_error("build_roc: empty impostor score list");
  for (double s : genuine_) {
    if (!std::isfinite(s)) throw validation_error("build_roc: non-finite genuine score");
  }
  for (double s : impostor_) {
    if (!std::isfinite(s)) throw validation_error("build_roc: non-finite impostor score");
  }
  std::sort(genuine_.begin(), genuine_.end());
  std::sort(impostor_.begin(), impostor_.end());
}

double RocCurve::far_at(double threshold) const { return tail_rate(impostor_, threshold); }
double RocCurve::tar_at(double threshold) const { return tail_rate(genuine_, threshold); }

RocOperatingPoint RocCurve::operating_point(double far_target) const {
  const ThresholdPick pick = threshold_at_rate(impostor_, far_target);
  return RocOperatingPoint{pick.threshold, tar_at(pick.threshold), pick.achieved_rate, pick.warning};
}

std::vector<RocPoint> RocCurve::points() const {
  std::vector<RocPoint> out;
  out.reserve(genuine_.size() + impostor_.size() + 2);
  out.push_back(RocPoint{kNegInf, 1.0, 1.0});

  std::size_t gi = 0, ii = 0;
  while (gi < genuine_.size() || ii < impostor_.size()) {
    double s = 0.0;
    if (ii >= impostor_.size() || (gi < genuine_.size() && genuine_[gi] <= impostor_[ii])) {
      s = genuine_[gi];
    } else {
      s = impostor_[ii];
    }
    // Everything below s is already consumed, so gi/ii index the first
    // element >= s and the suffix lengths are the >= tail counts.
    const double far =
        static_cast<double>(impostor_.size() - ii) / static_cast<double>(impostor_.size());
    const double tar = static_cast<double>(genuine_.size() - gi) / static_cast<double>(genuine_.size());
    out.push_back(RocPoint{s, far, tar});
    while (gi < genuine_.size() && genuine_[gi] == s) ++gi;
    while (ii < impostor_.size() && impostor_[ii] == s) ++ii;
  }

  if (out.back().far > 0.0) {
    const double above = std::nextafter(impostor_.back(), std::numeric_limits<double>::infinity());
    out.push_back(RocPoint{above, 0.0, tar_at(above)});
  }
  return out;
}

RocCurve build_roc(std::vector<double> genuine, std::vector<double> impostor) {
  return RocCurve(std::move(genuine), std::move(impostor));
}

RocOperatingPoint operating_point(const RocCurve& roc, double far_target) {
  return roc.operating_point(far_target);
}

VerificationReport verification_by_elapsed_time(const ScoreDataset& dataset, std::string_view matcher,
                                                PairMode pairing, std::span<const double> far_targets,
                                                std::span<const int> bucket_years) {
  if (!dataset.has_matcher(matcher)) {
    throw validation_error("unknown matcher '" + std::string(matcher) + "'");
  }
  if (pairing == PairMode::impostor) {
    throw validation_error("verification pairing must be a genuine mode");
  }
  for (double f : far_targets) {
    if (!(f > 0.0 && f <= 1.0)) throw validation_error("FAR target must be in (0, 1]");
  }

  // Pooled impostor distribution: every impostor-labeled record.
  std::vector<double> impostor;
  for (const auto& [key, score] : dataset.matcher_scores(matcher)) {
    const auto lo = static_cast<std::int32_t>(key >> 32);
    const auto hi = static_cast<std::int32_t>(key & 0xffffffffULL);
    if (!dataset.genuine_pair(lo, hi)) impostor.push_back(score);
  }
  if (impostor.empty()) {
    throw validation_error("matcher '" + std::string(matcher) + "' has no impostor scores");
  }
  std::sort(impostor.begin(), impostor.end());

  // Genuine scores bucketed by round(delta_t).
  std::vector<std::vector<double>> bucket_scores(bucket_years.size());
  std::size_t n_genuine_total = 0;
  for (const PairRef& pair : enumerate_pairs(dataset, pairing)) {
    const auto s = dataset.score(matcher, pair.probe_image, pair.reference_image);
    if (!s.has_value()) {
      throw validation_error("matcher '" + std::string(matcher) + "' is missing the genuine pair (" +
                             dataset.image_id(pair.probe_image) + ", " +
                             dataset.image_id(pair.reference_image) + ")");
    }
    ++n_genuine_total;
    const double dt = dataset.image_age(pair.probe_image) - dataset.image_age(pair.reference_image);
    const long bucket = std::lround(std::abs(dt));
    for (std::size_t bi = 0; bi < bucket_years.size(); ++bi) {
      if (bucket == bucket_years[bi]) bucket_scores[bi].push_back(*s);
    }
  }
  for (auto& scores : bucket_scores) std::sort(scores.begin(), scores.end());

  VerificationReport report;
  report.matcher_id = std::string(matcher);
  report.pairing = pairing;
  report.n_genuine_total = n_genuine_total;
  report.n_impostor = impostor.size();

  for (double far : far_targets) {
    const ThresholdPick pick = threshold_at_rate(impostor, far);
    for (std::size_t bi = 0; bi < bucket_years.size(); ++bi) {
      VerificationCell cell;
      cell.bucket_years = bucket_years[bi];
      cell.far_target = far;
      cell.threshold = pick.threshold;
      cell.achieved_far = pick.achieved_rate;
      cell.warning = pick.warning;
      cell.n_genuine = bucket_scores[bi].size();
      if (bucket_scores[bi].empty()) {
        cell.empty_bucket = true;
        cell.tar = std::numeric_limits<double>::quiet_NaN();
      } else {
        const auto it =
            std::lower_bound(bucket_scores[bi].begin(), bucket_scores[bi].end(), pick.threshold);
        cell.tar = static_cast<double>(bucket_scores[bi].end() - it) /
                   static_cast<double>(bucket_scores[bi].size());
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace longmatch
