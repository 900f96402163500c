#pragma once

#include <span>
#include <string>
#include <vector>

#include "longmatch/dataset.hpp"

namespace longmatch {

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;
  double tar = 0.0;
};

struct RocOperatingPoint {
  double threshold = 0.0;
  double tar = 0.0;
  double achieved_far = 0.0;
  bool warning = false;  // far target finer than the impostor set resolves
};

/// Picks the smallest threshold in {-inf} u distinct(calibration scores)
/// u {just above max} whose tail rate #{s >= t}/n is <= target. The
/// fallback point just above the maximum has rate 0.
struct ThresholdPick {
  double threshold = 0.0;
  double achieved_rate = 0.0;
  bool warning = false;
};
ThresholdPick threshold_at_rate(std::span<const double> sorted_scores, double target_rate);

/// Exact empirical ROC over the raw scores, no binning. Acceptance uses
/// score >= threshold everywhere.
class RocCurve {
 public:
  RocCurve(std::vector<double> genuine, std::vector<double> impostor);

  std::size_t genuine_count() const { return genuine_.size(); }
  std::size_t impostor_count() const { return impostor_.size(); }
  std::span<const double> genuine_sorted() const { return genuine_; }
  std::span<const double> impostor_sorted() const { return impostor_; }

  double far_at(double threshold) const;
  double tar_at(double threshold) const;

  /// Threshold from the impostor distribution (smallest with far <= target).
  RocOperatingPoint operating_point(double far_target) const;

  /// Materialized curve: a -inf endpoint (far = tar = 1), one point per
  /// distinct observed score, and a far = 0 endpoint when none exists.
  std::vector<RocPoint> points() const;

 private:
  std::vector<double> genuine_;   // ascending
  std::vector<double> impostor_;  // ascending
};

RocCurve build_roc(std::vector<double> genuine, std::vector<double> impostor);
RocOperatingPoint operating_point(const RocCurve& roc, double far_target);

struct VerificationCell {
  int bucket_years = 0;
  double far_target = 0.0;
  double threshold = 0.0;
  double achieved_far = 0.0;
  double tar = 0.0;
  std::size_t n_genuine = 0;
  bool empty_bucket = false;
  bool warning = false;
};

struct VerificationReport {
  std::string matcher_id;
  PairMode pairing = PairMode::enrollment_anchored;
  std::size_t n_genuine_total = 0;
  std::size_t n_impostor = 0;
  std::vector<VerificationCell> cells;

  // Protocol conventions, embedded verbatim in JSON output.
  static constexpr const char* kTieConvention = "accept if score >= threshold";
  static constexpr const char* kFarDefinition = "fraction of impostor scores >= threshold";
  static constexpr const char* kBucketRule = "bucket k holds genuine pairs with round(delta_t) == k";
};

/// TAR per (elapsed-time bucket, FAR target) for one matcher. Genuine
/// scores come from `pairing` pairs bucketed by round(delta_t); thresholds
/// come from the single pooled impostor distribution (all impostor
/// records of the matcher). Empty requested buckets are flagged.
VerificationReport verification_by_elapsed_time(const ScoreDataset& dataset, std::string_view matcher,
                                                PairMode pairing, std::span<const double> far_targets,
                                                std::span<const int> bucket_years);

}  // namespace longmatch
