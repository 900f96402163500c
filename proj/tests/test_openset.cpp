#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "longmatch/openset.hpp"
#include "longmatch/rng.hpp"
#include "support/brute_metrics.hpp"

using namespace longmatch;

namespace {

// Random open-set instance: `n_gallery` gallery subjects with 2 images
// (enrollment + probe), `n_nonmated` single-image distractors, every
// probe-gallery pair scored. Ties are injected by rounding.
struct Instance {
  ScoreDataset dataset;
  OpenSetProtocol protocol;
  std::vector<oracle::MatedProbe> oracle_mated;
  std::vector<double> oracle_nonmated_max;
};

Instance make_instance(std::uint64_t seed, int n_gallery, int n_nonmated) {
  RandomStream rng(seed);
  std::vector<Subject> subjects;
  std::vector<ComparisonRecord> records;
  Instance out;

  const auto draw_score = [&](bool mated) {
    double s = mated ? rng.normal(1.0, 0.8) : rng.normal(0.0, 0.8);
    if (rng.uniform01() < 0.4) s = std::round(s * 5.0) / 5.0;
    return s;
  };

  std::vector<std::string> gallery_ids;
  for (int i = 0; i < n_gallery; ++i) {
    Subject subject;
    subject.subject_id = "g" + std::to_string(i);
    subject.gender = Gender::girl;
    subject.acquisitions = {{subject.subject_id + "_e", 5.0}, {subject.subject_id + "_p", 7.0}};
    gallery_ids.push_back(subject.acquisitions[0].image_id);
    out.protocol.gallery_images.push_back(subject.acquisitions[0].image_id);
    out.protocol.mated_probes.push_back(subject.acquisitions[1].image_id);
    subjects.push_back(std::move(subject));
  }
  for (int i = 0; i < n_nonmated; ++i) {
    Subject subject;
    subject.subject_id = "n" + std::to_string(i);
    subject.gender = Gender::boy;
    subject.acquisitions = {{subject.subject_id + "_0", 6.0}};
    out.protocol.nonmated_probes.push_back(subject.acquisitions[0].image_id);
    subjects.push_back(std::move(subject));
  }

  for (int i = 0; i < n_gallery; ++i) {
    oracle::MatedProbe probe;
    const std::string probe_id = "g" + std::to_string(i) + "_p";
    for (int k = 0; k < n_gallery; ++k) {
      const bool mated = k == i;
      const double s = draw_score(mated);
      records.push_back(ComparisonRecord{"m", probe_id, gallery_ids[static_cast<std::size_t>(k)], s});
      if (mated) {
        probe.mate_score = s;
      } else {
        probe.nonmate_scores.push_back(s);
      }
    }
    out.oracle_mated.push_back(std::move(probe));
  }
  for (int i = 0; i < n_nonmated; ++i) {
    const std::string probe_id = "n" + std::to_string(i) + "_0";
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_gallery; ++k) {
      const double s = draw_score(false);
      records.push_back(ComparisonRecord{"m", probe_id, gallery_ids[static_cast<std::size_t>(k)], s});
      best = std::max(best, s);
    }
    out.oracle_nonmated_max.push_back(best);
  }

  out.dataset = ScoreDataset::build(std::move(subjects), records);
  return out;
}

}  // namespace

TEST_CASE("perfect separation identifies everyone at rank 1") {
  auto instance = make_instance(1, 5, 5);
  // Overwrite with deterministic perfect scores.
  std::vector<ComparisonRecord> records;
  for (const auto& rec : instance.dataset.canonical_records()) {
    ComparisonRecord r = rec;
    const bool genuine = instance.dataset.genuine_pair(instance.dataset.image_index(r.probe_image_id),
                                                       instance.dataset.image_index(r.reference_image_id));
    r.raw_score = genuine ? 1.0 : 0.05;
    records.push_back(r);
  }
  std::vector<Subject> subjects = instance.dataset.subjects();
  auto ds = ScoreDataset::build(std::move(subjects), records);
  instance.protocol.ranks = {1};
  instance.protocol.far_targets = {0.2, 1.0};
  const auto report = open_set_identify(ds, "m", instance.protocol);
  for (const auto& cell : report.cells) CHECK(cell.dir == 1.0);
}

TEST_CASE("hand fixture matches exhaustive enumeration") {
  // 3 gallery subjects, 4 probes (3 mated + 1 nonmated alone is too
  // small; use 3 nonmated), including deliberate ties.
  auto instance = make_instance(7, 3, 3);
  instance.protocol.ranks = {1, 2, 3};
  instance.protocol.far_targets = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  const auto report = open_set_identify(instance.dataset, "m", instance.protocol);
  for (const auto& cell : report.cells) {
    const auto brute =
        oracle::dir_at(instance.oracle_mated, instance.oracle_nonmated_max, cell.rank, cell.far_target);
    CHECK(cell.threshold == brute.threshold);
    CHECK(cell.achieved_fpir == brute.fpir);
    CHECK(cell.dir == brute.dir);
  }
}

TEST_CASE("random instances match the oracle exactly") {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    RandomStream size_rng(seed);
    const int n_gallery = 2 + static_cast<int>(size_rng.below(12));
    const int n_nonmated = 1 + static_cast<int>(size_rng.below(12));
    auto instance = make_instance(seed * 13,n_gallery, n_nonmated);
    instance.protocol.ranks = {1, 2, n_gallery};
    instance.protocol.far_targets = {0.5, 1.0 / n_nonmated, 1.0};
    const auto serial = open_set_identify(instance.dataset, "m", instance.protocol, 1);
    const auto parallel = open_set_identify(instance.dataset, "m", instance.protocol, 4);
    for (std::size_t ci = 0; ci < serial.cells.size(); ++ci) {
      const auto& cell = serial.cells[ci];
      const auto& pcell = parallel.cells[ci];
      if (cell.threshold != pcell.threshold || cell.dir != pcell.dir) ++mismatches;
      const auto brute =
          oracle::dir_at(instance.oracle_mated, instance.oracle_nonmated_max, cell.rank, cell.far_target);
      if (cell.threshold != brute.threshold || cell.achieved_fpir != brute.fpir ||
          cell.dir != brute.dir || cell.warning != brute.warning) {
        ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("dir monotone in rank and far; closed-set equivalence at far 1") {
  auto instance = make_instance(33, 10, 8);
  const int gallery_size = 10;
  instance.protocol.ranks = {1, 2, 3, 5, gallery_size};
  instance.protocol.far_targets = {0.125, 0.25, 0.5, 1.0};
  const auto report = open_set_identify(instance.dataset, "m", instance.protocol);

  const auto cell_at = [&](int rank, double far) {
    for (const auto& cell : report.cells) {
      if (cell.rank == rank && cell.far_target == far) return cell;
    }
    REQUIRE(false);
    return report.cells.front();
  };

  for (double far : instance.protocol.far_targets) {
    double previous = 0.0;
    for (int rank : instance.protocol.ranks) {
      const auto cell = cell_at(rank, far);
      CHECK(cell.dir >= previous);
      previous = cell.dir;
    }
  }
  for (int rank : instance.protocol.ranks) {
    double previous = 0.0;
    for (double far : instance.protocol.far_targets) {
      const auto cell = cell_at(rank, far);
      CHECK(cell.dir >= previous);
      previous = cell.dir;
    }
  }

  // far = 1, rank = |gallery|: closed-set identification rate of mated
  // probes; with every mate somewhere in the ranking this is 1.
  CHECK(cell_at(gallery_size, 1.0).dir == 1.0);
}

TEST_CASE("protocol validation") {
  auto instance = make_instance(5, 4, 3);

  SUBCASE("empty nonmated set with far < 1") {
    instance.protocol.nonmated_probes.clear();
    instance.protocol.far_targets = {0.1};
    CHECK_THROWS_WITH_AS(open_set_identify(instance.dataset, "m", instance.protocol),
                         doctest::Contains("nonmated"), validation_error);
  }
  SUBCASE("empty nonmated set is fine at far = 1") {
    instance.protocol.nonmated_probes.clear();
    instance.protocol.far_targets = {1.0};
    const auto report = open_set_identify(instance.dataset, "m", instance.protocol);
    CHECK(report.cells.size() == instance.protocol.ranks.size());
  }
  SUBCASE("missing probe-gallery score") {
    // Remove one probe-gallery record.
    std::vector<ComparisonRecord> records = instance.dataset.canonical_records();
    const auto needle = std::find_if(records.begin(), records.end(), [&](const ComparisonRecord& r) {
      return !instance.dataset.genuine_pair(instance.dataset.image_index(r.probe_image_id),
                                            instance.dataset.image_index(r.reference_image_id));
    });
    REQUIRE(needle != records.end());
    records.erase(needle);
    std::vector<Subject> subjects = instance.dataset.subjects();
    auto ds = ScoreDataset::build(std::move(subjects), records);
    CHECK_THROWS_WITH_AS(open_set_identify(ds, "m", instance.protocol),
                         doctest::Contains("missing"), validation_error);
  }
  SUBCASE("unknown matcher") {
    CHECK_THROWS_AS(open_set_identify(instance.dataset, "x", instance.protocol), validation_error);
  }
  SUBCASE("two gallery images for one subject") {
    instance.protocol.gallery_images.push_back(instance.protocol.mated_probes.front());
    CHECK_THROWS_WITH_AS(open_set_identify(instance.dataset, "m", instance.protocol),
                         doctest::Contains("two gallery images"), validation_error);
  }
}

TEST_CASE("default protocol construction") {
  std::vector<Subject> subjects{
      Subject{"s1", Gender::girl, {{"a0", 4.0}, {"a1", 5.0}, {"a2", 7.0}}},
      Subject{"s2", Gender::boy, {{"b0", 5.0}, {"b1", 6.0}}},
      Subject{"s3", Gender::boy, {{"c0", 6.0}}},
  };
  auto ds = ScoreDataset::build(std::move(subjects), {});

  const auto protocol = default_open_set_protocol(ds);
  CHECK(protocol.gallery_images == std::vector<std::string>{"a0", "b0"});
  CHECK(protocol.mated_probes == std::vector<std::string>{"a1", "a2", "b1"});
  CHECK(protocol.nonmated_probes == std::vector<std::string>{"c0"});

  OpenSetProtocolOptions options;
  options.probe_lapse_years = 1;
  const auto filtered = default_open_set_protocol(ds, options);
  CHECK(filtered.mated_probes == std::vector<std::string>{"a1", "b1"});
}
