#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "longmatch/fusion.hpp"
#include "longmatch/rng.hpp"
#include "support/fixtures.hpp"

using namespace longmatch;

namespace {

// Tiny dataset scored by two matchers on the same four pairs.
ScoreDataset two_matcher_dataset(double affine_scale = 1.0, double affine_shift = 0.0) {
  std::vector<Subject> subjects{
      Subject{"s1", Gender::girl, {{"a1", 5.0}, {"a2", 7.0}}},
      Subject{"s2", Gender::boy, {{"b1", 6.0}, {"b2", 9.0}}},
  };
  std::vector<ComparisonRecord> records;
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"a2", "a1"}, {"b2", "b1"}, {"a1", "b1"}, {"a2", "b2"}};
  const std::vector<double> scores_a{0.9, 0.8, 0.1, 0.2};
  const std::vector<double> scores_b{5.0, 4.0, 1.0, 2.0};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    records.push_back(ComparisonRecord{"a", pairs[i].first, pairs[i].second, scores_a[i]});
    records.push_back(ComparisonRecord{"b", pairs[i].first, pairs[i].second,
                                       affine_scale * scores_b[i] + affine_shift});
  }
  return ScoreDataset::build(std::move(subjects), records);
}

}  // namespace

TEST_CASE("pooled normalization maps") {
  std::vector<double> scores{0.0, 1.0, 2.0};
  SUBCASE("identity") {
    const auto norm = pooled_normalization(scores, FusionNorm::identity);
    CHECK(norm.apply(0.3) == 0.3);
  }
  SUBCASE("zscore with fixed parameters") {
    // mu_a = 0, sd_a = 1; mu_b = 1, sd_b = 2: 0.5 + (2.0 - 1)/2 = 1.0.
    const PooledNorm norm_a{0.0, 1.0};
    const PooledNorm norm_b{1.0, 2.0};
    CHECK(norm_a.apply(0.5) + norm_b.apply(2.0) == doctest::Approx(1.0));
  }
  SUBCASE("zscore from pooled scores") {
    const auto norm = pooled_normalization(scores, FusionNorm::zscore_pooled);
    CHECK(norm.offset == doctest::Approx(1.0));
    CHECK(norm.scale == doctest::Approx(1.0));
  }
  SUBCASE("minmax") {
    const auto norm = pooled_normalization(scores, FusionNorm::minmax_pooled);
    CHECK(norm.apply(0.0) == 0.0);
    CHECK(norm.apply(2.0) == 1.0);
  }
  SUBCASE("degenerate dispersion") {
    std::vector<double> constant{1.0, 1.0};
    CHECK_THROWS_AS(pooled_normalization(constant, FusionNorm::zscore_pooled), validation_error);
    CHECK_THROWS_AS(pooled_normalization(constant, FusionNorm::minmax_pooled), validation_error);
  }
}

TEST_CASE("identity fusion is a plain sum") {
  auto ds = two_matcher_dataset();
  FusionSpec spec;
  spec.matcher_a = "a";
  spec.matcher_b = "b";
  spec.normalization = FusionNorm::identity;
  const auto fused = fuse_sum(ds, spec);
  CHECK(fused.has_matcher("fused(a+b)"));
  CHECK(fused.record_count("fused(a+b)") == 4);
  CHECK(*fused.score("fused(a+b)", fused.image_index("a1"), fused.image_index("a2")) ==
        doctest::Approx(0.9 + 5.0));
}

TEST_CASE("zscore fusion is invariant under positive affine transforms") {
  auto base = fuse_sum(two_matcher_dataset(), FusionSpec{"a", "b", FusionNorm::zscore_pooled, ""});
  auto transformed =
      fuse_sum(two_matcher_dataset(3.5, -2.0), FusionSpec{"a", "b", FusionNorm::zscore_pooled, ""});
  const auto base_records = base.matcher_scores("fused(a+b)");
  const auto transformed_records = transformed.matcher_scores("fused(a+b)");
  REQUIRE(base_records.size() == transformed_records.size());
  for (std::size_t i = 0; i < base_records.size(); ++i) {
    CHECK(base_records[i].second ==
          doctest::Approx(transformed_records[i].second).epsilon(1e-10));
  }
}

TEST_CASE("monotone dominance of the fused score") {
  RandomStream rng(55);
  auto ds = fixtures::random_dataset(4, 10);
  // Score the same pairs with a second matcher.
  std::vector<ComparisonRecord> extra;
  for (const auto& rec : ds.canonical_records()) {
    extra.push_back(ComparisonRecord{"m2", rec.probe_image_id, rec.reference_image_id, rng.normal()});
  }
  auto both = ds.with_records(extra);
  const auto fused = fuse_sum(both, FusionSpec{"m", "m2", FusionNorm::zscore_pooled, ""});

  const auto a = fused.matcher_scores("m");
  const auto b = fused.matcher_scores("m2");
  const auto f = fused.matcher_scores("fused(m+m2)");
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == f.size());
  std::size_t dominance_violations = 0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    for (std::size_t q = 0; q < a.size(); ++q) {
      if (a[p].second > a[q].second && b[p].second > b[q].second && !(f[p].second > f[q].second)) {
        ++dominance_violations;
      }
    }
  }
  CHECK(dominance_violations == 0);
}

TEST_CASE("fusion validation") {
  auto ds = two_matcher_dataset();
  SUBCASE("identical matchers") {
    CHECK_THROWS_AS(fuse_sum(ds, FusionSpec{"a", "a", FusionNorm::identity, ""}), validation_error);
  }
  SUBCASE("unknown matcher") {
    CHECK_THROWS_AS(fuse_sum(ds, FusionSpec{"a", "c", FusionNorm::identity, ""}), validation_error);
  }
  SUBCASE("label collision") {
    CHECK_THROWS_WITH_AS(fuse_sum(ds, FusionSpec{"a", "b", FusionNorm::identity, "a"}),
                         doctest::Contains("already present"), validation_error);
  }
  SUBCASE("mismatched pair sets") {
    std::vector<ComparisonRecord> extra{{"c", "a1", "a2", 0.5}};
    auto bigger = ds.with_records(extra);
    CHECK_THROWS_WITH_AS(fuse_sum(bigger, FusionSpec{"a", "c", FusionNorm::identity, ""}),
                         doctest::Contains("only"), validation_error);
  }
  SUBCASE("fused record count equals the common pair count") {
    const auto fused = fuse_sum(ds, FusionSpec{"a", "b", FusionNorm::zscore_pooled, ""});
    CHECK(fused.record_count("fused(a+b)") == ds.record_count("a"));
  }
}
