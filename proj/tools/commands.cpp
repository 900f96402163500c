#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "longmatch/csv.hpp"
#include "longmatch/ingest.hpp"
#include "longmatch/lmm.hpp"
#include "longmatch/longitudinal.hpp"
#include "longmatch/openset.hpp"
#include "longmatch/parallel.hpp"
#include "longmatch/roc.hpp"
#include "longmatch/synthgen.hpp"

namespace longmatch::cli {

namespace fs = std::filesystem;

namespace {

ModelKind parse_model(const std::string& name) {
  if (name == "bt") return ModelKind::bt;
  if (name == "gender") return ModelKind::c_gender;
  throw validation_error("unknown model '" + name + "' (expected bt or gender)");
}

StandardizationSet parse_std_set(const std::string& name) {
  if (name == "enrollment") return StandardizationSet::enrollment_anchored;
  if (name == "allpairs") return StandardizationSet::all_pairs;
  throw validation_error("unknown standardization set '" + name + "'");
}

PairMode parse_pairing(const std::string& name) {
  if (name == "enrollment") return PairMode::enrollment_anchored;
  if (name == "allpairs") return PairMode::all_pairs;
  throw validation_error("unknown pairing '" + name + "' (expected enrollment or allpairs)");
}

std::optional<Gender> parse_gender_flag(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return parse_gender_token(value);
}

std::pair<std::string, std::string> split_fuse(const std::string& expr) {
  const auto plus = expr.find('+');
  if (plus == std::string::npos || plus == 0 || plus + 1 == expr.size()) {
    throw validation_error("--fuse expects 'a+b', got '" + expr + "'");
  }
  return {expr.substr(0, plus), expr.substr(plus + 1)};
}

void write_json(const fs::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
  std::fprintf(stderr, "wrote %s\n", path.string().c_str());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text);
  std::fprintf(stderr, "wrote %s\n", path.string().c_str());
}

std::vector<std::string> csv_comments(const Json& config) {
  return {std::string(kToolName) + " " + kToolVersion, "config: " + config.dump()};
}

Json standardization_json(const ObservationSet& set) {
  Json j;
  j["set"] = set.std_set == StandardizationSet::enrollment_anchored ? "enrollment" : "allpairs";
  j["mean"] = jnum(set.params.mean);
  j["std_dev"] = jnum(set.params.std_dev);
  j["n_observations"] = set.observations.size();
  return j;
}

Json fit_json(const LmmFit& fit) {
  Json j;
  j["model"] = fit.model == ModelKind::bt ? "bt" : "gender";
  Json gamma;
  gamma["gamma00"] = jnum(fit.gamma00());
  if (fit.model == ModelKind::c_gender) gamma["gamma01"] = jnum(fit.gamma01());
  gamma["gamma10"] = jnum(fit.gamma10());
  if (fit.model == ModelKind::c_gender) gamma["gamma11"] = jnum(fit.gamma11());
  j["gamma"] = gamma;
  Json cov;
  cov["var_intercept"] = jnum(fit.ranef_cov.var_intercept);
  cov["var_slope"] = jnum(fit.ranef_cov.var_slope);
  cov["cov_intercept_slope"] = jnum(fit.ranef_cov.cov);
  j["ranef_cov"] = cov;
  j["residual_var"] = jnum(fit.residual_var);
  j["deviance"] = jnum(fit.deviance);
  j["converged"] = fit.converged;
  j["boundary"] = fit.boundary;
  j["n_subjects"] = fit.n_subjects;
  j["n_observations"] = fit.n_observations;
  return j;
}

Json verification_json(const VerificationReport& report) {
  Json j;
  j["matcher"] = report.matcher_id;
  j["pairing"] =
      report.pairing == PairMode::enrollment_anchored ? "enrollment" : "allpairs";
  j["n_genuine_total"] = report.n_genuine_total;
  j["n_impostor"] = report.n_impostor;
  Json conventions;
  conventions["tie_convention"] = VerificationReport::kTieConvention;
  conventions["far_definition"] = VerificationReport::kFarDefinition;
  conventions["bucket_rule"] = VerificationReport::kBucketRule;
  j["conventions"] = conventions;
  Json cells = Json::array();
  for (const auto& cell : report.cells) {
    Json c;
    c["bucket_years"] = cell.bucket_years;
    c["far_target"] = jnum(cell.far_target);
    c["threshold"] = jnum(cell.threshold);
    c["achieved_far"] = jnum(cell.achieved_far);
    c["tar"] = jnum(cell.tar);
    c["n_genuine"] = cell.n_genuine;
    c["empty_bucket"] = cell.empty_bucket;
    c["warning"] = cell.warning;
    cells.push_back(std::move(c));
  }
  j["cells"] = cells;
  return j;
}

std::string verification_csv(const VerificationReport& report, const Json& config) {
  std::ostringstream out;
  for (const auto& line : csv_comments(config)) out << "# " << line << "\n";
  out << "bucket_years,far_target,threshold,achieved_far,tar,n_genuine,empty_bucket,warning\n";
  for (const auto& cell : report.cells) {
    out << cell.bucket_years << ',' << format_double(cell.far_target) << ','
        << format_double(cell.threshold) << ',' << format_double(cell.achieved_far) << ','
        << format_double(cell.tar) << ',' << cell.n_genuine << ',' << (cell.empty_bucket ? 1 : 0)
        << ',' << (cell.warning ? 1 : 0) << "\n";
  }
  return out.str();
}

Json openset_json(const OpenSetReport& report, const OpenSetProtocol& protocol) {
  Json j;
  j["matcher"] = report.matcher_id;
  j["n_gallery"] = report.n_gallery;
  j["n_mated"] = report.n_mated;
  j["n_nonmated"] = report.n_nonmated;
  Json conventions;
  conventions["far_definition"] = OpenSetReport::kFarDefinition;
  conventions["rank_rule"] = OpenSetReport::kRankRule;
  conventions["tie_convention"] = OpenSetReport::kTieConvention;
  j["conventions"] = conventions;
  Json proto;
  proto["gallery_images"] = protocol.gallery_images;
  proto["mated_probes"] = protocol.mated_probes;
  proto["nonmated_probes"] = protocol.nonmated_probes;
  proto["ranks"] = protocol.ranks;
  Json fars = Json::array();
  for (double f : protocol.far_targets) fars.push_back(jnum(f));
  proto["far_targets"] = fars;
  j["protocol"] = proto;
  Json cells = Json::array();
  for (const auto& cell : report.cells) {
    Json c;
    c["rank"] = cell.rank;
    c["far_target"] = jnum(cell.far_target);
    c["threshold"] = jnum(cell.threshold);
    c["achieved_fpir"] = jnum(cell.achieved_fpir);
    c["dir"] = jnum(cell.dir);
    c["warning"] = cell.warning;
    cells.push_back(std::move(c));
  }
  j["cells"] = cells;
  return j;
}

std::string openset_csv(const OpenSetReport& report, const Json& config) {
  std::ostringstream out;
  for (const auto& line : csv_comments(config)) out << "# " << line << "\n";
  out << "rank,far_target,threshold,achieved_fpir,dir,warning\n";
  for (const auto& cell : report.cells) {
    out << cell.rank << ',' << format_double(cell.far_target) << ','
        << format_double(cell.threshold) << ',' << format_double(cell.achieved_fpir) << ','
        << format_double(cell.dir) << ',' << (cell.warning ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string band_csv(const std::vector<BandPoint>& band, const Json& config) {
  std::ostringstream out;
  for (const auto& line : csv_comments(config)) out << "# " << line << "\n";
  out << "delta_t,mean,lower,upper\n";
  for (const auto& point : band) {
    out << format_double(point.t) << ',' << format_double(point.mean) << ','
        << format_double(point.lower) << ',' << format_double(point.upper) << "\n";
  }
  return out.str();
}

Json bootstrap_json(const BootstrapResult& result) {
  Json j;
  j["n_replicates"] = result.n_replicates;
  j["master_seed"] = result.master_seed;
  j["interval_level"] = jnum(result.interval_level);
  j["n_nonconverged"] = result.n_nonconverged;
  j["parameter_names"] = result.parameter_names;
  Json means = Json::array(), lower = Json::array(), upper = Json::array();
  for (Eigen::Index i = 0; i < result.means.size(); ++i) {
    means.push_back(jnum(result.means[i]));
    lower.push_back(jnum(result.lower[i]));
    upper.push_back(jnum(result.upper[i]));
  }
  j["means"] = means;
  j["lower"] = lower;
  j["upper"] = upper;
  return j;
}

std::string bootstrap_replicates_csv(const BootstrapResult& result, const Json& config) {
  std::ostringstream out;
  for (const auto& line : csv_comments(config)) out << "# " << line << "\n";
  out << "replicate";
  for (const auto& name : result.parameter_names) out << ',' << name;
  out << ",converged,boundary\n";
  for (int r = 0; r < result.n_replicates; ++r) {
    out << r;
    for (Eigen::Index p = 0; p < result.replicate_values.cols(); ++p) {
      out << ',' << format_double(result.replicate_values(r, p));
    }
    out << ',' << int(result.replicate_converged[static_cast<std::size_t>(r)]) << ','
        << int(result.replicate_boundary[static_cast<std::size_t>(r)]) << "\n";
  }
  return out.str();
}

// Crossing rows for one matcher/fit at every (far, fraction) pair. The
// threshold originates from the matcher's raw impostor distribution and is
// mapped into standardized units with the observation-set parameters.
Json crossing_rows(const ScoreDataset& dataset, const std::string& matcher,
                   const ObservationSet& set, const LmmFit& fit, std::optional<Gender> gender,
                   std::span<const double> far_targets, std::span<const double> fractions,
                   double horizon, bool include_residual) {
  std::vector<double> impostor;
  for (const auto& [key, score] : dataset.matcher_scores(matcher)) {
    const auto lo = static_cast<std::int32_t>(key >> 32);
    const auto hi = static_cast<std::int32_t>(key & 0xffffffffULL);
    if (!dataset.genuine_pair(lo, hi)) impostor.push_back(score);
  }
  if (impostor.empty()) throw validation_error("matcher '" + matcher + "' has no impostor scores");
  std::sort(impostor.begin(), impostor.end());

  Json rows = Json::array();
  for (double far : far_targets) {
    const ThresholdPick pick = threshold_at_rate(impostor, far);
    const double standardized = (pick.threshold - set.params.mean) / set.params.std_dev;
    for (double fraction : fractions) {
      const CrossingResult result =
          crossing_time(fit, standardized, fraction, horizon, gender, include_residual);
      Json row;
      row["matcher"] = matcher;
      row["far_target"] = jnum(far);
      row["achieved_far"] = jnum(pick.achieved_rate);
      row["threshold_raw"] = jnum(pick.threshold);
      row["threshold_standardized"] = jnum(standardized);
      row["population_fraction"] = jnum(fraction);
      row["horizon_years"] = jnum(result.horizon);
      row["below_at_start"] = result.below_at_start;
      if (result.crossing_time.has_value()) {
        row["crossing_years"] = jnum(*result.crossing_time);
      } else {
        row["crossing_years"] = nullptr;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

Json summary_json(const DatasetSummary& s) {
  const auto histogram = [](const std::vector<std::pair<int, std::size_t>>& h) {
    Json out = Json::array();
    for (const auto& [bin, count] : h) out.push_back(Json::array({bin, count}));
    return out;
  };
  Json j;
  j["n_subjects"] = s.n_subjects;
  j["n_images"] = s.n_images;
  Json genders;
  genders["boys"] = s.n_boys;
  genders["girls"] = s.n_girls;
  genders["unknown"] = s.n_unknown_gender;
  j["gender_counts"] = genders;
  j["images_per_subject"] = histogram(s.images_per_subject);
  j["acquisition_age_years"] = histogram(s.acquisition_age_years);
  j["enrollment_age_years"] = histogram(s.enrollment_age_years);
  j["lapse_years"] = histogram(s.lapse_years);
  Json matchers = Json::array();
  for (const auto& m : s.matchers) {
    Json mj;
    mj["matcher_id"] = m.matcher_id;
    mj["n_records"] = m.n_records;
    mj["n_genuine"] = m.n_genuine;
    mj["n_impostor"] = m.n_impostor;
    matchers.push_back(std::move(mj));
  }
  j["matchers"] = matchers;
  return j;
}

}  // namespace

int resolved_threads(const InputOptions& inputs) {
  return inputs.threads > 0 ? inputs.threads : hardware_threads();
}

FusionNorm parse_fusion_norm(const std::string& name) {
  if (name == "zscore") return FusionNorm::zscore_pooled;
  if (name == "minmax") return FusionNorm::minmax_pooled;
  if (name == "identity") return FusionNorm::identity;
  throw validation_error("unknown fusion normalization '" + name + "'");
}

ScoreDataset load_dataset(const InputOptions& inputs) {
  ScoreDataset dataset = ingest_dataset_files(inputs.acquisitions, inputs.scores);

  if (!inputs.embeddings.empty()) {
    const EmbeddingTable table = load_embeddings_file(inputs.embeddings);
    std::vector<PairRef> pairs = enumerate_pairs(dataset, PairMode::all_pairs);
    if (inputs.embed_pairs == "all") {
      const auto impostor = enumerate_pairs(dataset, PairMode::impostor);
      pairs.insert(pairs.end(), impostor.begin(), impostor.end());
    } else if (inputs.embed_pairs != "anchored") {
      throw validation_error("unknown --embed-pairs '" + inputs.embed_pairs + "'");
    }
    const auto records =
        score_pairs(dataset, table, pairs, inputs.embed_matcher, resolved_threads(inputs));
    dataset = dataset.with_records(records);
  }

  for (const auto& expr : inputs.fuse) {
    const auto [a, b] = split_fuse(expr);
    FusionSpec spec;
    spec.matcher_a = a;
    spec.matcher_b = b;
    spec.normalization = parse_fusion_norm(inputs.fuse_norm);
    spec.output_label = inputs.fused_label;
    dataset = fuse_sum(dataset, spec);
  }
  return dataset;
}

Json inputs_config(const InputOptions& inputs) {
  Json j;
  j["acquisitions"] = inputs.acquisitions;
  j["scores"] = inputs.scores;
  if (!inputs.embeddings.empty()) {
    j["embeddings"] = inputs.embeddings;
    j["embed_matcher"] = inputs.embed_matcher;
    j["embed_pairs"] = inputs.embed_pairs;
  }
  if (!inputs.fuse.empty()) {
    j["fuse"] = inputs.fuse;
    j["fuse_norm"] = inputs.fuse_norm;
    if (!inputs.fused_label.empty()) j["fused_label"] = inputs.fused_label;
  }
  j["threads"] = resolved_threads(inputs);
  return j;
}

int run_summary(const SummaryOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  Json config = inputs_config(options.inputs);
  config["command"] = "summary";
  config["out"] = options.out_dir;
  Json j = report_shell(config);
  j["summary"] = summary_json(summarize(dataset));
  write_json(fs::path(options.out_dir) / "summary.json", j);
  return 0;
}

int run_synth(const SynthOptions& options) {
  if (options.preset != "clf-shaped") {
    throw validation_error("unknown preset '" + options.preset + "'");
  }
  GeneratorSpec spec = clf_shaped_spec(options.seed);
  if (options.subjects.has_value()) {
    spec.n_subjects = *options.subjects;
    spec.total_images = std::nullopt;  // exact replica total only at full size
  }
  if (options.distractors.has_value()) spec.n_nonmated_subjects = *options.distractors;
  if (!options.matchers.empty()) spec.matcher_ids = options.matchers;
  if (!options.impostors.empty()) {
    if (options.impostors == "anchored") {
      spec.impostor_pairs = ImpostorPairs::anchored;
    } else if (options.impostors == "all") {
      spec.impostor_pairs = ImpostorPairs::all;
    } else {
      throw validation_error("unknown --impostors '" + options.impostors + "'");
    }
  }

  Json config;
  config["command"] = "synth";
  config["preset"] = options.preset;
  config["seed"] = options.seed;
  config["subjects"] = spec.n_subjects;
  config["distractors"] = spec.n_nonmated_subjects;
  config["matchers"] = spec.matcher_ids;
  config["impostors"] = spec.impostor_pairs == ImpostorPairs::anchored ? "anchored" : "all";
  config["out"] = options.out_dir;

  const auto [dataset, truth] = generate_longitudinal(spec);

  std::ostringstream acq, scores;
  const auto comments = csv_comments(config);
  export_dataset(dataset, acq, scores, comments);
  write_text(fs::path(options.out_dir) / "acquisitions.csv", acq.str());
  write_text(fs::path(options.out_dir) / "scores.csv", scores.str());

  Json truth_json = report_shell(config);
  Json t;
  t["model"] = truth.model == ModelKind::bt ? "bt" : "gender";
  Json gamma = Json::array();
  for (double g : truth.gamma) gamma.push_back(jnum(g));
  t["gamma"] = gamma;
  t["var_intercept"] = jnum(truth.random_effects.var_intercept);
  t["var_slope"] = jnum(truth.random_effects.var_slope);
  t["cov_intercept_slope"] = jnum(truth.random_effects.cov);
  t["residual_var"] = jnum(truth.residual_var);
  t["impostor_mean"] = jnum(truth.impostor_mean);
  t["impostor_sd"] = jnum(truth.impostor_sd);
  t["seed"] = truth.seed;
  truth_json["truth"] = t;
  write_json(fs::path(options.out_dir) / "truth.json", truth_json);
  return 0;
}

int run_fuse(const FuseOptions& options) {
  if (options.inputs.fuse.empty()) {
    throw validation_error("fuse command requires at least one --fuse a+b");
  }
  const ScoreDataset dataset = load_dataset(options.inputs);
  Json config = inputs_config(options.inputs);
  config["command"] = "fuse";
  config["out"] = options.out_dir;

  std::ostringstream acq, scores;
  export_dataset(dataset, acq, scores, csv_comments(config));
  write_text(fs::path(options.out_dir) / "acquisitions.csv", acq.str());
  write_text(fs::path(options.out_dir) / "scores.csv", scores.str());
  return 0;
}

int run_verify(const VerifyOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  const auto report = verification_by_elapsed_time(dataset, options.matcher,
                                                   parse_pairing(options.pairing),
                                                   options.far_targets, options.buckets);
  Json config = inputs_config(options.inputs);
  config["command"] = "verify";
  config["matcher"] = options.matcher;
  Json fars = Json::array();
  for (double f : options.far_targets) fars.push_back(jnum(f));
  config["far_targets"] = fars;
  config["buckets"] = options.buckets;
  config["pairing"] = options.pairing;
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["verification"] = verification_json(report);
  write_json(fs::path(options.out_dir) / "verify.json", j);
  write_text(fs::path(options.out_dir) / "verify.csv", verification_csv(report, config));
  return 0;
}

int run_openset(const OpenSetOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  OpenSetProtocolOptions protocol_options;
  protocol_options.ranks = options.ranks;
  protocol_options.far_targets = options.far_targets;
  protocol_options.probe_lapse_years = options.lapse;
  const OpenSetProtocol protocol = default_open_set_protocol(dataset, protocol_options);
  const auto report =
      open_set_identify(dataset, options.matcher, protocol, resolved_threads(options.inputs));

  Json config = inputs_config(options.inputs);
  config["command"] = "openset";
  config["matcher"] = options.matcher;
  config["ranks"] = options.ranks;
  Json fars = Json::array();
  for (double f : options.far_targets) fars.push_back(jnum(f));
  config["far_targets"] = fars;
  if (options.lapse.has_value()) config["lapse"] = *options.lapse;
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["openset"] = openset_json(report, protocol);
  write_json(fs::path(options.out_dir) / "openset.json", j);
  write_text(fs::path(options.out_dir) / "openset.csv", openset_csv(report, config));
  return 0;
}

int run_fit(const FitCommandOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  const ObservationSet set =
      make_observations(dataset, options.matcher, parse_std_set(options.std_set));
  FitOptions fit_options;
  fit_options.reml = options.reml;
  const LmmFit fit = fit_ml(set.observations, parse_model(options.model), fit_options);

  Json config = inputs_config(options.inputs);
  config["command"] = "fit";
  config["matcher"] = options.matcher;
  config["model"] = options.model;
  config["std_set"] = options.std_set;
  config["reml"] = options.reml;
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["standardization"] = standardization_json(set);
  j["fit"] = fit_json(fit);
  write_json(fs::path(options.out_dir) / "fit.json", j);

  if (!fit.converged) {
    std::fprintf(stderr, "fit did not converge\n");
    return 4;
  }
  return 0;
}

int run_bootstrap(const BootstrapCommandOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  const ObservationSet set =
      make_observations(dataset, options.matcher, parse_std_set(options.std_set));
  BootstrapOptions boot;
  boot.replicates = options.replicates;
  boot.master_seed = options.seed;
  boot.interval_level = options.level;
  boot.restandardize = options.restandardize;
  boot.threads = resolved_threads(options.inputs);
  const BootstrapResult result =
      bootstrap_fit(set.observations, parse_model(options.model), boot);

  Json config = inputs_config(options.inputs);
  config["command"] = "bootstrap";
  config["matcher"] = options.matcher;
  config["model"] = options.model;
  config["std_set"] = options.std_set;
  config["replicates"] = options.replicates;
  config["seed"] = options.seed;
  config["level"] = jnum(options.level);
  config["restandardize"] = options.restandardize;
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["standardization"] = standardization_json(set);
  j["bootstrap"] = bootstrap_json(result);
  write_json(fs::path(options.out_dir) / "bootstrap.json", j);
  write_text(fs::path(options.out_dir) / "bootstrap_replicates.csv",
             bootstrap_replicates_csv(result, config));

  if (result.n_nonconverged == result.n_replicates) {
    std::fprintf(stderr, "all bootstrap replicates failed to converge\n");
    return 4;
  }
  return 0;
}

int run_band(const BandOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  const ObservationSet set =
      make_observations(dataset, options.matcher, parse_std_set(options.std_set));
  const ModelKind kind = parse_model(options.model);
  const LmmFit fit = fit_ml(set.observations, kind);
  const std::optional<Gender> gender = parse_gender_flag(options.gender);
  const std::vector<double> grid = parse_band_grid(options.grid);
  const auto band = population_band(fit, options.coverage, grid, gender, options.include_residual);

  Json config = inputs_config(options.inputs);
  config["command"] = "band";
  config["matcher"] = options.matcher;
  config["model"] = options.model;
  if (!options.gender.empty()) config["gender"] = options.gender;
  config["coverage"] = jnum(options.coverage);
  config["grid"] = options.grid;
  config["include_residual"] = options.include_residual;
  config["std_set"] = options.std_set;
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["standardization"] = standardization_json(set);
  j["fit"] = fit_json(fit);
  const TrendBand trend = make_trend_band(fit, options.coverage, gender, options.include_residual);
  Json band_meta;
  band_meta["coverage"] = jnum(options.coverage);
  band_meta["z"] = jnum(trend.z);
  band_meta["n_points"] = band.size();
  band_meta["csv"] = "band.csv";
  j["band"] = band_meta;
  write_json(fs::path(options.out_dir) / "band.json", j);
  write_text(fs::path(options.out_dir) / "band.csv", band_csv(band, config));
  return fit.converged ? 0 : 4;
}

int run_crossing(const CrossingOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  const ObservationSet set =
      make_observations(dataset, options.matcher, parse_std_set(options.std_set));
  const ModelKind kind = parse_model(options.model);
  const LmmFit fit = fit_ml(set.observations, kind);
  const std::optional<Gender> gender = parse_gender_flag(options.gender);

  Json config = inputs_config(options.inputs);
  config["command"] = "crossing";
  config["matcher"] = options.matcher;
  config["model"] = options.model;
  if (!options.gender.empty()) config["gender"] = options.gender;
  Json fars = Json::array();
  for (double f : options.far_targets) fars.push_back(jnum(f));
  config["far_targets"] = fars;
  Json fractions = Json::array();
  for (double f : options.fractions) fractions.push_back(jnum(f));
  config["fractions"] = fractions;
  config["horizon"] = jnum(options.horizon);
  config["include_residual"] = options.include_residual;
  config["std_set"] = options.std_set;
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["standardization"] = standardization_json(set);
  j["fit"] = fit_json(fit);
  j["crossings"] = crossing_rows(dataset, options.matcher, set, fit, gender, options.far_targets,
                                 options.fractions, options.horizon, options.include_residual);
  write_json(fs::path(options.out_dir) / "crossing.json", j);
  return fit.converged ? 0 : 4;
}

int run_report(const ReportOptions& options) {
  const ScoreDataset dataset = load_dataset(options.inputs);
  if (options.matchers.empty()) throw validation_error("report requires --matcher");
  if (options.bootstrap_replicates > 0 && !options.seed.has_value()) {
    throw validation_error("report with bootstrap requires --seed");
  }

  Json config = inputs_config(options.inputs);
  config["command"] = "report";
  config["matchers"] = options.matchers;
  Json fars = Json::array();
  for (double f : options.far_targets) fars.push_back(jnum(f));
  config["far_targets"] = fars;
  config["buckets"] = options.buckets;
  config["ranks"] = options.ranks;
  Json osf = Json::array();
  for (double f : options.openset_far) osf.push_back(jnum(f));
  config["openset_far"] = osf;
  config["coverage"] = jnum(options.coverage);
  Json fractions = Json::array();
  for (double f : options.fractions) fractions.push_back(jnum(f));
  config["fractions"] = fractions;
  config["bootstrap_replicates"] = options.bootstrap_replicates;
  if (options.seed.has_value()) config["seed"] = *options.seed;
  config["level"] = jnum(options.level);
  config["out"] = options.out_dir;

  Json j = report_shell(config);
  j["summary"] = summary_json(summarize(dataset));

  bool all_converged = true;
  Json matchers = Json::array();
  for (const auto& matcher : options.matchers) {
    Json m;
    m["matcher"] = matcher;

    const auto verification = verification_by_elapsed_time(
        dataset, matcher, PairMode::enrollment_anchored, options.far_targets, options.buckets);
    m["verification"] = verification_json(verification);
    write_text(fs::path(options.out_dir) / ("verify_" + matcher + ".csv"),
               verification_csv(verification, config));

    OpenSetProtocolOptions protocol_options;
    protocol_options.ranks = options.ranks;
    protocol_options.far_targets = options.openset_far;
    const OpenSetProtocol protocol = default_open_set_protocol(dataset, protocol_options);
    if (!protocol.nonmated_probes.empty()) {
      const auto openset =
          open_set_identify(dataset, matcher, protocol, resolved_threads(options.inputs));
      m["openset"] = openset_json(openset, protocol);
      write_text(fs::path(options.out_dir) / ("openset_" + matcher + ".csv"),
                 openset_csv(openset, config));
    }

    const ObservationSet set =
        make_observations(dataset, matcher, StandardizationSet::enrollment_anchored);
    m["standardization"] = standardization_json(set);

    const LmmFit fit_bt = fit_ml(set.observations, ModelKind::bt);
    m["fit_bt"] = fit_json(fit_bt);
    all_converged = all_converged && fit_bt.converged;
    if (fit_bt.gamma10() < 0.0) {
      m["one_sd_time_years"] = jnum(one_sd_time(fit_bt));
    }

    bool have_gender = true;
    for (const auto& obs : set.observations) have_gender = have_gender && obs.gender.has_value();
    if (have_gender) {
      const LmmFit fit_gender = fit_ml(set.observations, ModelKind::c_gender);
      m["fit_gender"] = fit_json(fit_gender);
      all_converged = all_converged && fit_gender.converged;
    }

    std::vector<double> grid;
    for (double t = 0.0; t <= 8.0 + 1e-9; t += 0.1) grid.push_back(t);
    const auto band = population_band(fit_bt, options.coverage, grid);
    write_text(fs::path(options.out_dir) / ("band_" + matcher + ".csv"), band_csv(band, config));
    Json band_meta;
    band_meta["coverage"] = jnum(options.coverage);
    band_meta["csv"] = "band_" + matcher + ".csv";
    m["band"] = band_meta;

    m["crossings"] = crossing_rows(dataset, matcher, set, fit_bt, std::nullopt,
                                   options.far_targets, options.fractions, 50.0, false);

    if (options.bootstrap_replicates > 0) {
      BootstrapOptions boot;
      boot.replicates = options.bootstrap_replicates;
      boot.master_seed = *options.seed;
      boot.interval_level = options.level;
      boot.threads = resolved_threads(options.inputs);
      const BootstrapResult result = bootstrap_fit(set.observations, ModelKind::bt, boot);
      m["bootstrap_bt"] = bootstrap_json(result);
      write_text(fs::path(options.out_dir) / ("bootstrap_" + matcher + ".csv"),
                 bootstrap_replicates_csv(result, config));
    }

    matchers.push_back(std::move(m));
  }
  j["matchers"] = matchers;
  write_json(fs::path(options.out_dir) / "report.json", j);
  return all_converged ? 0 : 4;
}

std::vector<double> parse_band_grid(const std::string& grid) {
  const auto first = grid.find(':');
  const auto second = grid.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw validation_error("--grid expects lo:hi:step, got '" + grid + "'");
  }
  const auto parse = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw validation_error("--grid expects numbers lo:hi:step, got '" + grid + "'");
    }
  };
  const double lo = parse(grid.substr(0, first));
  const double hi = parse(grid.substr(first + 1, second - first - 1));
  const double step = parse(grid.substr(second + 1));
  if (!(step > 0.0) || hi < lo) throw validation_error("--grid requires step > 0 and hi >= lo");
  std::vector<double> out;
  for (double t = lo; t <= hi + 1e-9; t += step) out.push_back(t);
  return out;
}

}  // namespace longmatch::cli
