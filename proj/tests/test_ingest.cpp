#include <doctest.h>

#include <sstream>

#include "longmatch/ingest.hpp"
#include "support/fixtures.hpp"

using namespace longmatch;

namespace {

const char* kAcquisitions =
    "subject_id,image_id,age_years,gender\n"
    "s1,a1,5,0\n"
    "s1,a2,7,girl\n"
    "s2,b1,6,M\n"
    "s2,b2,9,1\n";

const char* kScores =
    "matcher_id,probe_image_id,reference_image_id,score\n"
    "m,a2,a1,0.9\n"
    "m,b2,b1,0.8\n"
    "m,a1,b1,0.1\n"
    "m,a2,b2,0.2\n";

ScoreDataset ingest_strings(const std::string& acq, const std::string& scores) {
  std::istringstream a(acq), s(scores);
  return ingest_dataset(a, "acq.csv", s, "scores.csv");
}

}  // namespace

TEST_CASE("ingest counts and normalization") {
  const auto ds = ingest_strings(kAcquisitions, kScores);
  CHECK(ds.subject_count() == 2);
  CHECK(ds.image_count() == 4);
  CHECK(ds.record_count() == 4);
  CHECK(ds.subjects()[0].gender == Gender::girl);
  CHECK(ds.subjects()[1].gender == Gender::boy);
}

TEST_CASE("ingest rejects bad rows with line numbers") {
  SUBCASE("negative age") {
    const std::string acq =
        "subject_id,image_id,age_years,gender\n"
        "s1,a1,5,0\n"
        "s1,a2,-1,0\n";
    CHECK_THROWS_WITH_AS(ingest_strings(acq, kScores), doctest::Contains("acq.csv:3"),
                         validation_error);
    CHECK_THROWS_WITH_AS(ingest_strings(acq, kScores), doctest::Contains("age_years"),
                         validation_error);
  }
  SUBCASE("malformed score") {
    const std::string scores =
        "matcher_id,probe_image_id,reference_image_id,score\n"
        "m,a2,a1,abc\n";
    CHECK_THROWS_WITH_AS(ingest_strings(kAcquisitions, scores), doctest::Contains("scores.csv:2"),
                         validation_error);
  }
  SUBCASE("wrong column count") {
    const std::string acq =
        "subject_id,image_id,age_years,gender\n"
        "s1,a1,5\n";
    CHECK_THROWS_WITH_AS(ingest_strings(acq, kScores), doctest::Contains("acq.csv:2"),
                         validation_error);
  }
  SUBCASE("unknown image in scores") {
    const std::string scores =
        "matcher_id,probe_image_id,reference_image_id,score\n"
        "m,a1,Z,0.5\n";
    CHECK_THROWS_WITH_AS(ingest_strings(kAcquisitions, scores),
                         doctest::Contains("unknown image_id 'Z'"), validation_error);
  }
  SUBCASE("missing header") {
    CHECK_THROWS_WITH_AS(ingest_strings("s1,a1,5,0\n", kScores),
                         doctest::Contains("header"), validation_error);
  }
  SUBCASE("conflicting gender") {
    const std::string acq =
        "subject_id,image_id,age_years,gender\n"
        "s1,a1,5,0\n"
        "s1,a2,7,1\n";
    CHECK_THROWS_WITH_AS(ingest_strings(acq, kScores), doctest::Contains("conflicting gender"),
                         validation_error);
  }
}

TEST_CASE("export then ingest round-trips bit-identically") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto ds = fixtures::random_dataset(seed, 8);
    std::ostringstream acq1, sc1;
    export_dataset(ds, acq1, sc1);

    std::istringstream acq_in(acq1.str()), sc_in(sc1.str());
    const auto ds2 = ingest_dataset(acq_in, "a", sc_in, "s");
    std::ostringstream acq2, sc2;
    export_dataset(ds2, acq2, sc2);

    CHECK(acq1.str() == acq2.str());
    CHECK(sc1.str() == sc2.str());
  }
}

TEST_CASE("comment lines are skipped on ingest") {
  const std::string acq = std::string("# produced by a tool\n") + kAcquisitions;
  const auto ds = ingest_strings(acq, kScores);
  CHECK(ds.subject_count() == 2);
}

TEST_CASE("embeddings load and synthesize cosine records") {
  const std::string embeddings_csv =
      "image_id,d,v_0,v_1\n"
      "a1,2,1,0\n"
      "a2,2,1,0\n"
      "b1,2,0,1\n"
      "b2,2,0.70710678118654746,0.70710678118654746\n";
  std::istringstream in(embeddings_csv);
  const auto table = load_embeddings(in, "emb.csv");
  CHECK(table.dim == 2);
  CHECK(table.image_ids.size() == 4);

  // Build a dataset without records and synthesize them from embeddings.
  std::vector<Subject> subjects{
      Subject{"s1", Gender::girl, {{"a1", 5.0}, {"a2", 7.0}}},
      Subject{"s2", Gender::boy, {{"b1", 6.0}, {"b2", 9.0}}},
  };
  auto ds = ScoreDataset::build(std::move(subjects), {});

  std::vector<PairRef> pairs = enumerate_pairs(ds, PairMode::all_pairs);
  const auto impostors = enumerate_pairs(ds, PairMode::impostor);
  pairs.insert(pairs.end(), impostors.begin(), impostors.end());

  const auto serial = score_pairs(ds, table, pairs, "cos", 1);
  const auto parallel = score_pairs(ds, table, pairs, "cos", 4);
  REQUIRE(serial.size() == pairs.size());
  bool identical = serial.size() == parallel.size();
  for (std::size_t i = 0; identical && i < serial.size(); ++i) {
    identical = serial[i].probe_image_id == parallel[i].probe_image_id &&
                serial[i].reference_image_id == parallel[i].reference_image_id &&
                serial[i].raw_score == parallel[i].raw_score;
  }
  CHECK(identical);

  const auto with = ds.with_records(serial);
  CHECK(with.score("cos", with.image_index("a1"), with.image_index("a2")) == doctest::Approx(1.0));
  CHECK(with.score("cos", with.image_index("a1"), with.image_index("b1")) == doctest::Approx(0.0));

  SUBCASE("missing embedding is an error") {
    const std::string partial =
        "image_id,d,v_0,v_1\n"
        "a1,2,1,0\n";
    std::istringstream pin(partial);
    const auto small = load_embeddings(pin, "emb.csv");
    CHECK_THROWS_WITH_AS(score_pairs(ds, small, pairs, "cos", 1),
                         doctest::Contains("no embedding"), validation_error);
  }
  SUBCASE("inconsistent dimension is an error") {
    const std::string bad =
        "image_id,d,v_0,v_1\n"
        "a1,2,1,0\n"
        "a2,1,1\n";
    std::istringstream bin(bad);
    CHECK_THROWS_WITH_AS(load_embeddings(bin, "emb.csv"), doctest::Contains("dimension"),
                         validation_error);
  }
}

TEST_CASE("atomic file write") {
  fixtures::TempDir dir("atomic");
  const auto path = dir.path() / "nested" / "out.txt";
  write_file_atomic(path, "payload");
  CHECK(fixtures::slurp(path) == "payload");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}
