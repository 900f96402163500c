#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "longmatch/errors.hpp"

namespace longmatch {

enum class Gender : int { girl = 0, boy = 1 };

/// Accepts "0", "1", "F", "M", "girl", "boy" (case-insensitive); an empty
/// token means the gender is unknown.
std::optional<Gender> parse_gender_token(std::string_view token);
const char* gender_token(Gender g);  // canonical "0" / "1"

struct Acquisition {
  std::string image_id;
  double age_years = 0.0;
};

struct Subject {
  std::string subject_id;
  std::optional<Gender> gender;
  std::vector<Acquisition> acquisitions;  // strictly ascending age; index 0 is enrollment
};

struct ComparisonRecord {
  std::string matcher_id;
  std::string probe_image_id;
  std::string reference_image_id;
  double raw_score = 0.0;
};

enum class PairMode { enrollment_anchored, all_pairs, impostor };

/// One comparison pair by interned image index. Genuine iff both images
/// belong to the same subject (derived, never stored in records).
struct PairRef {
  std::int32_t probe_image = -1;
  std::int32_t reference_image = -1;
  bool genuine = false;
};

struct StandardizationParams {
  double mean = 0.0;
  double std_dev = 1.0;  // sample std dev (n-1 denominator), > 0
};

struct LongitudinalObservation {
  std::string subject_id;
  double delta_t = 0.0;  // years since enrollment acquisition, > 0
  double y_standardized = 0.0;
  std::optional<Gender> gender;
};

struct ImageRef {
  std::int32_t subject = -1;
  std::int32_t acquisition = -1;
};

/// Immutable after construction; safe for unsynchronized shared reads.
///
/// Image ids are interned: indices follow the lexicographic order of the
/// id strings, so index comparisons reproduce string comparisons and the
/// canonical record order is the sorted (matcher, lo id, hi id) order.
class ScoreDataset {
 public:
  ScoreDataset() = default;

  /// Validates all invariants: unique image ids, finite non-negative ages,
  /// strictly ascending ages per subject, records referencing known
  /// distinct images, unique (matcher, unordered pair).
  static ScoreDataset build(std::vector<Subject> subjects, std::span<const ComparisonRecord> records);

  std::size_t subject_count() const { return subjects_.size(); }
  std::size_t image_count() const { return images_.size(); }
  const std::vector<Subject>& subjects() const { return subjects_; }
  const std::vector<std::string>& matcher_ids() const { return matcher_ids_; }
  bool has_matcher(std::string_view matcher) const;

  std::int32_t image_index(std::string_view image_id) const;  // -1 when absent
  const std::string& image_id(std::int32_t index) const;
  ImageRef image_ref(std::int32_t index) const { return images_[static_cast<std::size_t>(index)].ref; }
  double image_age(std::int32_t index) const;
  const Subject& image_subject(std::int32_t index) const;
  bool genuine_pair(std::int32_t img_a, std::int32_t img_b) const;

  std::size_t record_count() const;
  std::size_t record_count(std::string_view matcher) const;
  std::optional<double> score(std::string_view matcher, std::int32_t img_a, std::int32_t img_b) const;

  /// Per-matcher scores keyed by packed pair (lo index << 32 | hi index),
  /// ascending by key.
  std::span<const std::pair<std::uint64_t, double>> matcher_scores(std::string_view matcher) const;

  /// Records in canonical order: sorted by (matcher, lo id, hi id), with
  /// probe = lexicographically smaller image id.
  std::vector<ComparisonRecord> canonical_records() const;

  /// New dataset with extra records appended (same subjects).
  ScoreDataset with_records(std::span<const ComparisonRecord> extra) const;

  static std::uint64_t pack_pair(std::int32_t a, std::int32_t b);

 private:
  struct Image {
    std::string id;
    ImageRef ref;
  };
  struct MatcherScores {
    std::string matcher_id;
    std::vector<std::pair<std::uint64_t, double>> by_pair;  // sorted by key
  };

  const MatcherScores* find_matcher(std::string_view matcher) const;

  std::vector<Subject> subjects_;            // sorted by subject_id
  std::vector<Image> images_;                // sorted by image id; index = interned id
  std::unordered_map<std::string, std::int32_t> image_index_;
  std::vector<std::string> matcher_ids_;     // sorted
  std::vector<MatcherScores> scores_;        // parallel to matcher_ids_
};

/// a.b / (|a||b|), clamped to [-1, 1]. Throws on dimension mismatch or a
/// zero-norm input.
double cosine_score(std::span<const double> a, std::span<const double> b);

/// enrollment_anchored: (later image, enrollment) per subject, sum N_i - 1.
/// all_pairs: all same-subject pairs (later image as probe), sum C(N_i, 2).
/// impostor: all cross-subject unordered pairs.
std::vector<PairRef> enumerate_pairs(const ScoreDataset& dataset, PairMode mode);

/// Genuine-score standardization: Y = (y - mean) / std_dev with the sample
/// (n-1) standard deviation. Requires >= 2 scores with non-zero dispersion.
std::pair<StandardizationParams, std::vector<double>> standardize_genuine(std::span<const double> scores);

/// Which genuine set supplies the standardization mean/sd. The modeled
/// observations are always the enrollment-anchored pairs.
enum class StandardizationSet { enrollment_anchored, all_pairs };

struct ObservationSet {
  std::string matcher_id;
  StandardizationSet std_set = StandardizationSet::enrollment_anchored;
  StandardizationParams params;
  std::vector<LongitudinalObservation> observations;
};

ObservationSet make_observations(const ScoreDataset& dataset, std::string_view matcher,
                                 StandardizationSet std_set = StandardizationSet::enrollment_anchored);

struct MatcherCounts {
  std::string matcher_id;
  std::size_t n_records = 0;
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;
};

struct DatasetSummary {
  std::size_t n_subjects = 0;
  std::size_t n_images = 0;
  std::size_t n_boys = 0;
  std::size_t n_girls = 0;
  std::size_t n_unknown_gender = 0;
  std::vector<std::pair<int, std::size_t>> images_per_subject;    // count -> subjects
  std::vector<std::pair<int, std::size_t>> acquisition_age_years; // floor(age) -> images
  std::vector<std::pair<int, std::size_t>> enrollment_age_years;  // floor(age) -> subjects
  std::vector<std::pair<int, std::size_t>> lapse_years;           // round(max dt) -> subjects
  std::vector<MatcherCounts> matchers;
};

DatasetSummary summarize(const ScoreDataset& dataset);

}  // namespace longmatch
