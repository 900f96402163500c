#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "longmatch/errors.hpp"
#include "longmatch/version.hpp"

#include "commands.hpp"

namespace {

using namespace longmatch;
using namespace longmatch::cli;

// Exit codes: 0 ok, 2 bad arguments, 3 input validation, 4 non-convergence,
// 5 I/O failure.
constexpr int kExitBadArguments = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 5;

void add_input_options(CLI::App* cmd, InputOptions& inputs) {
  cmd->add_option("--acquisitions", inputs.acquisitions, "Acquisitions CSV")->required();
  cmd->add_option("--scores", inputs.scores, "Comparison scores CSV")->required();
  cmd->add_option("--embeddings", inputs.embeddings,
                  "Embeddings CSV; cosine scores are synthesized for the requested pairs");
  cmd->add_option("--embed-matcher", inputs.embed_matcher,
                  "Matcher id for synthesized cosine records");
  cmd->add_option("--embed-pairs", inputs.embed_pairs, "Pairs to synthesize: all | anchored")
      ->check(CLI::IsMember({"all", "anchored"}));
  cmd->add_option("--fuse", inputs.fuse, "Sum-fuse two matchers, e.g. --fuse cots+facenet");
  cmd->add_option("--fuse-norm", inputs.fuse_norm, "Fusion normalization")
      ->check(CLI::IsMember({"zscore", "minmax", "identity"}));
  cmd->add_option("--fused-label", inputs.fused_label, "Label for the fused matcher");
  cmd->add_option("--threads", inputs.threads, "Worker threads (default: machine parallelism)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolName) +
               " - longitudinal biometric score analysis (verification, open-set "
               "identification, mixed-effects score-decay models)"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  SummaryOptions summary;
  auto* summary_cmd = app.add_subcommand("summary", "Dataset statistics report");
  add_input_options(summary_cmd, summary.inputs);
  summary_cmd->add_option("--out", summary.out_dir, "Output directory")->required();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with known truth");
  synth_cmd->add_option("--preset", synth.preset, "Generator preset")
      ->check(CLI::IsMember({"clf-shaped"}));
  synth_cmd->add_option("--seed", synth.seed, "Master seed")->required();
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--subjects", synth.subjects, "Override subject count");
  synth_cmd->add_option("--distractors", synth.distractors, "Override distractor count");
  synth_cmd->add_option("--matchers", synth.matchers, "Matcher ids to generate")->delimiter(',');
  synth_cmd->add_option("--impostors", synth.impostors, "Impostor pairs: anchored | all")
      ->check(CLI::IsMember({"anchored", "all"}));

  FuseOptions fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Materialize a fused matcher into canonical CSVs");
  add_input_options(fuse_cmd, fuse.inputs);
  fuse_cmd->add_option("--out", fuse.out_dir, "Output directory")->required();

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "TAR at FAR by elapsed-time bucket");
  add_input_options(verify_cmd, verify.inputs);
  verify_cmd->add_option("--matcher", verify.matcher, "Matcher id")->required();
  verify_cmd->add_option("--far", verify.far_targets, "FAR targets")->delimiter(',');
  verify_cmd->add_option("--buckets", verify.buckets, "Elapsed-time buckets (years)")->delimiter(',');
  verify_cmd->add_option("--pairing", verify.pairing, "Genuine pairing")
      ->check(CLI::IsMember({"enrollment", "allpairs"}));
  verify_cmd->add_option("--out", verify.out_dir, "Output directory")->required();

  OpenSetOptions openset;
  auto* openset_cmd = app.add_subcommand("openset", "Open-set identification (DIR at rank/FAR)");
  add_input_options(openset_cmd, openset.inputs);
  openset_cmd->add_option("--matcher", openset.matcher, "Matcher id")->required();
  openset_cmd->add_option("--ranks", openset.ranks, "Rank targets")->delimiter(',');
  openset_cmd->add_option("--far", openset.far_targets, "FPIR targets")->delimiter(',');
  openset_cmd->add_option("--lapse", openset.lapse, "Keep mated probes with round(dt) == lapse");
  openset_cmd->add_option("--out", openset.out_dir, "Output directory")->required();

  FitCommandOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the mixed-effects score-decay model");
  add_input_options(fit_cmd, fit.inputs);
  fit_cmd->add_option("--matcher", fit.matcher, "Matcher id")->required();
  fit_cmd->add_option("--model", fit.model, "Model: bt | gender")
      ->check(CLI::IsMember({"bt", "gender"}));
  fit_cmd->add_option("--std-set", fit.std_set, "Standardization set: enrollment | allpairs")
      ->check(CLI::IsMember({"enrollment", "allpairs"}));
  fit_cmd->add_flag("--reml", fit.reml, "REML instead of ML");
  fit_cmd->add_option("--out", fit.out_dir, "Output directory")->required();

  BootstrapCommandOptions bootstrap;
  auto* bootstrap_cmd =
      app.add_subcommand("bootstrap", "Subject-level bootstrap of the model parameters");
  add_input_options(bootstrap_cmd, bootstrap.inputs);
  bootstrap_cmd->add_option("--matcher", bootstrap.matcher, "Matcher id")->required();
  bootstrap_cmd->add_option("--model", bootstrap.model, "Model: bt | gender")
      ->check(CLI::IsMember({"bt", "gender"}));
  bootstrap_cmd->add_option("--std-set", bootstrap.std_set, "Standardization set")
      ->check(CLI::IsMember({"enrollment", "allpairs"}));
  bootstrap_cmd->add_option("-B,--replicates", bootstrap.replicates, "Bootstrap replicates");
  bootstrap_cmd->add_option("--seed", bootstrap.seed, "Master seed")->required();
  bootstrap_cmd->add_option("--level", bootstrap.level, "Percentile interval level");
  bootstrap_cmd->add_flag("--restandardize", bootstrap.restandardize,
                          "Re-standardize responses inside each replicate");
  bootstrap_cmd->add_option("--out", bootstrap.out_dir, "Output directory")->required();

  BandOptions band;
  auto* band_cmd = app.add_subcommand("band", "Population trend band");
  add_input_options(band_cmd, band.inputs);
  band_cmd->add_option("--matcher", band.matcher, "Matcher id")->required();
  band_cmd->add_option("--model", band.model, "Model: bt | gender")
      ->check(CLI::IsMember({"bt", "gender"}));
  band_cmd->add_option("--gender", band.gender, "Gender for the gender model: girl | boy");
  band_cmd->add_option("--coverage", band.coverage, "Band coverage, e.g. 0.80");
  band_cmd->add_option("--grid", band.grid, "Time grid lo:hi:step");
  band_cmd->add_flag("--include-residual", band.include_residual,
                     "Include residual scatter in the band");
  band_cmd->add_option("--std-set", band.std_set, "Standardization set")
      ->check(CLI::IsMember({"enrollment", "allpairs"}));
  band_cmd->add_option("--out", band.out_dir, "Output directory")->required();

  CrossingOptions crossing;
  auto* crossing_cmd =
      app.add_subcommand("crossing", "Time until a population quantile crosses a FAR threshold");
  add_input_options(crossing_cmd, crossing.inputs);
  crossing_cmd->add_option("--matcher", crossing.matcher, "Matcher id")->required();
  crossing_cmd->add_option("--model", crossing.model, "Model: bt | gender")
      ->check(CLI::IsMember({"bt", "gender"}));
  crossing_cmd->add_option("--gender", crossing.gender, "Gender for the gender model");
  crossing_cmd->add_option("--far", crossing.far_targets, "FAR targets for the thresholds")->delimiter(',');
  crossing_cmd->add_option("--fraction", crossing.fractions, "Population fractions")->delimiter(',');
  crossing_cmd->add_option("--horizon", crossing.horizon, "Search horizon in years");
  crossing_cmd->add_flag("--include-residual", crossing.include_residual,
                         "Include residual scatter");
  crossing_cmd->add_option("--std-set", crossing.std_set, "Standardization set")
      ->check(CLI::IsMember({"enrollment", "allpairs"}));
  crossing_cmd->add_option("--out", crossing.out_dir, "Output directory")->required();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand(
      "report", "Full analysis bundle: summary, verification, open-set, fits, bands, crossings");
  add_input_options(report_cmd, report.inputs);
  report_cmd->add_option("--matcher", report.matchers, "Matcher ids")->required()->delimiter(',');
  report_cmd->add_option("--far", report.far_targets, "Verification FAR targets")->delimiter(',');
  report_cmd->add_option("--buckets", report.buckets, "Elapsed-time buckets")->delimiter(',');
  report_cmd->add_option("--ranks", report.ranks, "Open-set rank targets")->delimiter(',');
  report_cmd->add_option("--openset-far", report.openset_far, "Open-set FPIR targets")->delimiter(',');
  report_cmd->add_option("--coverage", report.coverage, "Band coverage");
  report_cmd->add_option("--fractions", report.fractions, "Crossing population fractions")->delimiter(',');
  report_cmd->add_option("-B,--replicates", report.bootstrap_replicates,
                         "Bootstrap replicates (0 skips)");
  report_cmd->add_option("--seed", report.seed, "Master seed for the bootstrap");
  report_cmd->add_option("--level", report.level, "Bootstrap interval level");
  report_cmd->add_option("--out", report.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArguments;
  }

  try {
    if (summary_cmd->parsed()) return run_summary(summary);
    if (synth_cmd->parsed()) return run_synth(synth);
    if (fuse_cmd->parsed()) return run_fuse(fuse);
    if (verify_cmd->parsed()) return run_verify(verify);
    if (openset_cmd->parsed()) return run_openset(openset);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (bootstrap_cmd->parsed()) return run_bootstrap(bootstrap);
    if (band_cmd->parsed()) return run_band(band);
    if (crossing_cmd->parsed()) return run_crossing(crossing);
    if (report_cmd->parsed()) return run_report(report);
  } catch (const convergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
