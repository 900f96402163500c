#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "longmatch/dataset.hpp"
#include "longmatch/lmm.hpp"

namespace longmatch {

/// Which impostor records a generated dataset materializes.
///   anchored: every (enrollment image, image of another subject) pair,
///             plus every (nonmated distractor image, enrollment) pair.
///   all:      every cross-subject unordered pair.
enum class ImpostorPairs { anchored, all };

struct DiscreteCounts {
  std::vector<int> values;
  std::vector<double> weights;
};

struct UniformRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Ground-truth generator for the two-level score-decay model. Scores are
/// produced on the raw scale of the trend model; the analysis pipeline
/// standardizes them like any other matcher output.
struct GeneratorSpec {
  int n_subjects = 0;
  DiscreteCounts sessions_per_subject{{2, 3, 4, 5, 6}, {1, 1, 1, 1, 1}};
  UniformRange enrollment_age{2.0, 13.0};
  UniformRange session_gap{0.6, 1.6};  // years, strictly positive
  double boy_fraction = 0.5;
  /// Adjust drawn session counts so images total exactly this many.
  std::optional<int> total_images;
  int n_nonmated_subjects = 0;  // single-image distractors (open-set probes)

  ModelKind truth_model = ModelKind::bt;
  /// Design order: bt [g00, g10]; c_gender [g00, g01, g10, g11].
  std::vector<double> gamma{0.0, -1.0};
  RandomEffectsCovariance random_effects;
  double residual_var = 1.0;

  double impostor_mean = 0.0;
  double impostor_sd = 1.0;
  ImpostorPairs impostor_pairs = ImpostorPairs::anchored;

  std::vector<std::string> matcher_ids{"synth"};
  std::uint64_t seed = 0;
};

/// Marginals shaped like the child-faces study: 919 subjects, 3,682 images
/// (2-6 sessions averaging 4), enrollment ages 2-13, annual-ish gaps, 66%
/// boys, 756 distractors, genuine trend well separated from impostors.
GeneratorSpec clf_shaped_spec(std::uint64_t seed);

struct GeneratedTruth {
  ModelKind model = ModelKind::bt;
  std::vector<double> gamma;
  RandomEffectsCovariance random_effects;
  double residual_var = 0.0;
  double impostor_mean = 0.0;
  double impostor_sd = 0.0;
  std::uint64_t seed = 0;
};

/// Fully reproducible from spec.seed. Genuine scores follow the trend
/// model (enrollment-anchored pairs use dt since enrollment; other
/// same-subject pairs use the lapse between the two acquisitions);
/// impostor records sample the impostor distribution.
std::pair<ScoreDataset, GeneratedTruth> generate_longitudinal(const GeneratorSpec& spec);

/// Plain Gaussian score samples for metric oracles.
std::pair<std::vector<double>, std::vector<double>> generate_match_scores(
    std::size_t n_genuine, std::size_t n_impostor, double genuine_mean, double genuine_sd,
    double impostor_mean, double impostor_sd, std::uint64_t seed);

class RandomStream;

/// One (b0, b1) ~ N(0, G) draw; generate_longitudinal uses this per subject.
std::pair<double, double> draw_random_effects(RandomStream& stream,
                                              const RandomEffectsCovariance& g);

}  // namespace longmatch
