#pragma once

#include <span>
#include <string>

#include "longmatch/dataset.hpp"

namespace longmatch {

enum class FusionNorm { zscore_pooled, minmax_pooled, identity };

const char* fusion_norm_name(FusionNorm norm);

struct FusionSpec {
  std::string matcher_a;
  std::string matcher_b;
  FusionNorm normalization = FusionNorm::zscore_pooled;
  std::string output_label;  // empty -> default_fused_label(a, b)
};

std::string default_fused_label(const std::string& a, const std::string& b);

/// Affine map s -> (s - offset) / scale fitted on one matcher's pooled
/// (genuine + impostor) scores.
struct PooledNorm {
  double offset = 0.0;
  double scale = 1.0;
  double apply(double s) const { return (s - offset) / scale; }
};

PooledNorm pooled_normalization(std::span<const double> scores, FusionNorm norm);

/// Sum fusion: fused(p) = norm_a(s_a(p)) + norm_b(s_b(p)) for every pair p,
/// with unit weights. Requires the two matchers to score exactly the same
/// pair set. Returns the dataset with fused records appended.
ScoreDataset fuse_sum(const ScoreDataset& dataset, const FusionSpec& spec);

}  // namespace longmatch
