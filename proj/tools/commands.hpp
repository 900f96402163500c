#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "longmatch/dataset.hpp"
#include "longmatch/fusion.hpp"

#include "json_out.hpp"

namespace longmatch::cli {

/// Dataset inputs shared by every analysis command.
struct InputOptions {
  std::string acquisitions;
  std::string scores;
  std::string embeddings;                 // optional
  std::string embed_matcher = "embeddings";
  std::string embed_pairs = "all";        // all | anchored
  std::vector<std::string> fuse;          // "a+b" entries
  std::string fuse_norm = "zscore";
  std::string fused_label;                // empty -> default
  int threads = 0;                        // 0 -> hardware
};

ScoreDataset load_dataset(const InputOptions& inputs);
Json inputs_config(const InputOptions& inputs);
int resolved_threads(const InputOptions& inputs);
FusionNorm parse_fusion_norm(const std::string& name);

struct SummaryOptions {
  InputOptions inputs;
  std::string out_dir;
};
int run_summary(const SummaryOptions& options);

struct SynthOptions {
  std::string preset = "clf-shaped";
  std::uint64_t seed = 0;
  std::string out_dir;
  std::optional<int> subjects;
  std::optional<int> distractors;
  std::vector<std::string> matchers;
  std::string impostors;  // empty -> preset default; anchored | all
};
int run_synth(const SynthOptions& options);

struct FuseOptions {
  InputOptions inputs;
  std::string out_dir;
};
int run_fuse(const FuseOptions& options);

struct VerifyOptions {
  InputOptions inputs;
  std::string matcher;
  std::vector<double> far_targets{0.0001, 0.001};
  std::vector<int> buckets{1, 3, 5};
  std::string pairing = "enrollment";  // enrollment | allpairs
  std::string out_dir;
};
int run_verify(const VerifyOptions& options);

struct OpenSetOptions {
  InputOptions inputs;
  std::string matcher;
  std::vector<int> ranks{1, 3};
  std::vector<double> far_targets{0.01};
  std::optional<int> lapse;
  std::string out_dir;
};
int run_openset(const OpenSetOptions& options);

struct FitCommandOptions {
  InputOptions inputs;
  std::string matcher;
  std::string model = "bt";  // bt | gender
  std::string std_set = "enrollment";
  bool reml = false;
  std::string out_dir;
};
int run_fit(const FitCommandOptions& options);

struct BootstrapCommandOptions {
  InputOptions inputs;
  std::string matcher;
  std::string model = "bt";
  std::string std_set = "enrollment";
  int replicates = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  bool restandardize = false;
  std::string out_dir;
};
int run_bootstrap(const BootstrapCommandOptions& options);

struct BandOptions {
  InputOptions inputs;
  std::string matcher;
  std::string model = "bt";
  std::string gender;  // girl | boy, required for the gender model
  double coverage = 0.80;
  std::string grid = "0:8:0.1";  // lo:hi:step
  bool include_residual = false;
  std::string std_set = "enrollment";
  std::string out_dir;
};
int run_band(const BandOptions& options);

struct CrossingOptions {
  InputOptions inputs;
  std::string matcher;
  std::string model = "bt";
  std::string gender;
  std::vector<double> far_targets{0.0001, 0.001};
  std::vector<double> fractions{0.95, 0.99};
  double horizon = 50.0;
  bool include_residual = false;
  std::string std_set = "enrollment";
  std::string out_dir;
};
int run_crossing(const CrossingOptions& options);

struct ReportOptions {
  InputOptions inputs;
  std::vector<std::string> matchers;
  std::vector<double> far_targets{0.0001, 0.001};
  std::vector<int> buckets{1, 3, 5};
  std::vector<int> ranks{1, 3};
  std::vector<double> openset_far{0.01};
  double coverage = 0.80;
  std::vector<double> fractions{0.95, 0.99};
  int bootstrap_replicates = 0;  // 0 skips the bootstrap
  std::optional<std::uint64_t> seed;
  double level = 0.95;
  std::string out_dir;
};
int run_report(const ReportOptions& options);

std::vector<double> parse_band_grid(const std::string& grid);

}  // namespace longmatch::cli
