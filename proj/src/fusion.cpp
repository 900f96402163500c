#include "longmatch/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "longmatch/stats.hpp"

namespace longmatch {

const char* fusion_norm_name(FusionNorm norm) {
  switch (norm) {
    case FusionNorm::zscore_pooled: return "zscore";
    case FusionNorm::minmax_pooled: return "minmax";
    case FusionNorm::identity: return "identity";
  }
  return "?";
}

std::string default_fused_label(const std::string& a, const std::string& b) {
  return "fused(" + a + "+" + b + ")";
}

PooledNorm pooled_normalization(std::span<const double> scores, FusionNorm norm) {
  switch (norm) {
    case FusionNorm::identity:
      return PooledNorm{0.0, 1.0};
    case FusionNorm::zscore_pooled: {
      const double mu = mean(scores);
      const double var = sample_variance(scores, mu);
      if (var == 0.0) throw validation_error("fusion: zero score dispersion, z-score undefined");
      return PooledNorm{mu, std::sqrt(var)};
    }
    case FusionNorm::minmax_pooled: {
      const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
      if (*lo == *hi) throw validation_error("fusion: zero score range, min-max undefined");
      return PooledNorm{*lo, *hi - *lo};
    }
  }
  throw validation_error("fusion: unknown normalization");
}

ScoreDataset fuse_sum(const ScoreDataset& dataset, const FusionSpec& spec) {
  if (spec.matcher_a == spec.matcher_b) {
    throw validation_error("fusion: matcher_a and matcher_b must differ");
  }
  for (const auto& m : {spec.matcher_a, spec.matcher_b}) {
    if (!dataset.has_matcher(m)) throw validation_error("fusion: unknown matcher '" + m + "'");
  }
  const std::string label =
      spec.output_label.empty() ? default_fused_label(spec.matcher_a, spec.matcher_b) : spec.output_label;
  if (dataset.has_matcher(label)) {
    throw validation_error("fusion: output label '" + label + "' already present in dataset");
  }

  const auto a = dataset.matcher_scores(spec.matcher_a);
  const auto b = dataset.matcher_scores(spec.matcher_b);

  const auto describe_pair = [&](std::uint64_t key) {
    const auto lo = static_cast<std::int32_t>(key >> 32);
    const auto hi = static_cast<std::int32_t>(key & 0xffffffffULL);
    return "(" + dataset.image_id(lo) + ", " + dataset.image_id(hi) + ")";
  };

  // Both by_pair spans are sorted by key; walk them in lockstep.
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    if (ib >= b.size() || (ia < a.size() && a[ia].first < b[ib].first)) {
      throw validation_error("fusion: pair " + describe_pair(a[ia].first) + " scored by '" +
                             spec.matcher_a + "' only");
    }
    if (ia >= a.size() || b[ib].first < a[ia].first) {
      throw validation_error("fusion: pair " + describe_pair(b[ib].first) + " scored by '" +
                             spec.matcher_b + "' only");
    }
    ++ia;
    ++ib;
  }

  std::vector<double> scores_a(a.size()), scores_b(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) scores_a[i] = a[i].second;
  for (std::size_t i = 0; i < b.size(); ++i) scores_b[i] = b[i].second;
  const PooledNorm norm_a = pooled_normalization(scores_a, spec.normalization);
  const PooledNorm norm_b = pooled_normalization(scores_b, spec.normalization);

  std::vector<ComparisonRecord> fused;
  fused.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto lo = static_cast<std::int32_t>(a[i].first >> 32);
    const auto hi = static_cast<std::int32_t>(a[i].first & 0xffffffffULL);
    fused.push_back(ComparisonRecord{label, dataset.image_id(lo), dataset.image_id(hi),
                                     norm_a.apply(a[i].second) + norm_b.apply(b[i].second)});
  }
  return dataset.with_records(fused);
}

}  // namespace longmatch
