#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef LONGMATCH_CLI_PATH
#error "LONGMATCH_CLI_PATH must be defined"
#endif

int run_cli(const std::string& args, const fs::path& workdir) {
  const std::string command = "cd '" + workdir.string() + "' && '" + LONGMATCH_CLI_PATH + "' " +
                              args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

// File bytes for every regular file under dir, keyed by relative path.
std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), dir).string()] = fixtures::slurp(entry.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cli full pipeline is deterministic byte-for-byte") {
  fixtures::TempDir dir("pipeline");
  const auto& wd = dir.path();

  REQUIRE(run_cli("synth --seed 9 --out data --subjects 30 --distractors 12 --matchers a,b", wd) == 0);
  REQUIRE(fs::exists(wd / "data/acquisitions.csv"));

  const std::string inputs = "--acquisitions data/acquisitions.csv --scores data/scores.csv";
  const std::string report_args = "report " + inputs +
                                  " --fuse a+b --matcher 'a,b,fused(a+b)' --far 0.01,0.05 "
                                  "--buckets 1,2,3 --ranks 1,3 --openset-far 0.1 -B 12 --seed 4 "
                                  "--out rep";
  REQUIRE(run_cli(report_args, wd) == 0);
  const auto first = dir_bytes(wd / "rep");
  REQUIRE_FALSE(first.empty());
  REQUIRE(run_cli(report_args, wd) == 0);
  const auto second = dir_bytes(wd / "rep");
  CHECK(first == second);

  // Re-running synth with the same seed reproduces the dataset exactly.
  const auto data_before = dir_bytes(wd / "data");
  REQUIRE(run_cli("synth --seed 9 --out data --subjects 30 --distractors 12 --matchers a,b", wd) == 0);
  CHECK(dir_bytes(wd / "data") == data_before);

  // The report JSON carries tool metadata and the resolved config.
  const auto report = nlohmann::json::parse(fixtures::slurp(wd / "rep/report.json"));
  CHECK(report["tool"]["name"] == "longmatch");
  CHECK(report["config"]["command"] == "report");
  CHECK(report["matchers"].size() == 3);
  CHECK(report["matchers"][2]["fit_bt"]["converged"].is_boolean());
}

TEST_CASE("cli exit codes") {
  fixtures::TempDir dir("exitcodes");
  const auto& wd = dir.path();
  REQUIRE(run_cli("synth --seed 3 --out data --subjects 12 --distractors 4 --matchers m", wd) == 0);
  const std::string inputs = "--acquisitions data/acquisitions.csv --scores data/scores.csv";

  SUBCASE("unknown matcher -> 3, message names it") {
    CHECK(run_cli("verify " + inputs + " --matcher ghost --far 0.1 --buckets 1 --out v", wd) == 3);
    CHECK(fixtures::slurp(wd / "cli_stderr.txt").find("ghost") != std::string::npos);
  }
  SUBCASE("missing required --seed -> 2") {
    CHECK(run_cli("synth --out s2", wd) == 2);
  }
  SUBCASE("bad flag value -> 2") {
    CHECK(run_cli("fit " + inputs + " --matcher m --model nope --out f", wd) == 2);
  }
  SUBCASE("missing input file -> 5") {
    CHECK(run_cli("summary --acquisitions nope.csv --scores data/scores.csv --out s", wd) == 5);
  }
  SUBCASE("malformed row -> 3 with line number") {
    fixtures::spit(wd / "bad.csv", "subject_id,image_id,age_years,gender\ns1,i1,-2,0\n");
    CHECK(run_cli("summary --acquisitions bad.csv --scores data/scores.csv --out s", wd) == 3);
    CHECK(fixtures::slurp(wd / "cli_stderr.txt").find("bad.csv:2") != std::string::npos);
  }
}

TEST_CASE("cli summary content matches the dataset") {
  fixtures::TempDir dir("summary");
  const auto& wd = dir.path();
  REQUIRE(run_cli("synth --seed 21 --out data --subjects 25 --distractors 10 --matchers m", wd) == 0);
  REQUIRE(run_cli("summary --acquisitions data/acquisitions.csv --scores data/scores.csv --out s",
                  wd) == 0);
  const auto j = nlohmann::json::parse(fixtures::slurp(wd / "s/summary.json"));
  CHECK(j["summary"]["n_subjects"] == 35);  // 25 longitudinal + 10 distractors
  std::size_t subjects_from_histogram = 0;
  for (const auto& bin : j["summary"]["images_per_subject"]) {
    subjects_from_histogram += bin[1].get<std::size_t>();
  }
  CHECK(subjects_from_histogram == 35);
  CHECK(j["summary"]["matchers"].size() == 1);
  CHECK(j["summary"]["gender_counts"]["boys"].get<int>() +
            j["summary"]["gender_counts"]["girls"].get<int>() ==
        35);
}

TEST_CASE("cli fuse writes canonical csvs that re-ingest") {
  fixtures::TempDir dir("fuse");
  const auto& wd = dir.path();
  REQUIRE(run_cli("synth --seed 31 --out data --subjects 15 --distractors 5 --matchers x,y", wd) == 0);
  REQUIRE(run_cli("fuse --acquisitions data/acquisitions.csv --scores data/scores.csv "
                  "--fuse x+y --out fused",
                  wd) == 0);
  REQUIRE(run_cli("summary --acquisitions fused/acquisitions.csv --scores fused/scores.csv "
                  "--out s",
                  wd) == 0);
  const auto j = nlohmann::json::parse(fixtures::slurp(wd / "s/summary.json"));
  REQUIRE(j["summary"]["matchers"].size() == 3);
  CHECK(j["summary"]["matchers"][0]["matcher_id"] == "fused(x+y)");
}

TEST_CASE("cli band and crossing artifacts") {
  fixtures::TempDir dir("bandcross");
  const auto& wd = dir.path();
  REQUIRE(run_cli("synth --seed 41 --out data --subjects 40 --distractors 10 --matchers m", wd) == 0);
  const std::string inputs = "--acquisitions data/acquisitions.csv --scores data/scores.csv";

  REQUIRE(run_cli("band " + inputs + " --matcher m --coverage 0.8 --grid 0:4:1 --out b", wd) == 0);
  const auto band_csv = fixtures::slurp(wd / "b/band.csv");
  CHECK(band_csv.find("delta_t,mean,lower,upper") != std::string::npos);
  // 0,1,2,3,4 -> five data rows after two comments and the header.
  CHECK(std::count(band_csv.begin(), band_csv.end(), '\n') == 8);

  REQUIRE(run_cli("crossing " + inputs + " --matcher m --far 0.05 --fraction 0.95 --out c", wd) == 0);
  const auto j = nlohmann::json::parse(fixtures::slurp(wd / "c/crossing.json"));
  REQUIRE(j["crossings"].size() == 1);
  CHECK(j["crossings"][0]["matcher"] == "m");
  CHECK(j["crossings"][0]["far_target"] == 0.05);
}
