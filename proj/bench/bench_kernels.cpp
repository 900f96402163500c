// Serial-vs-parallel benchmark for the data-parallel kernels: pairwise
// cosine scoring, open-set probe evaluation, and bootstrap replicates.
// Each kernel runs its serial reference path (threads = 1) and the OpenMP
// path, verifies the outputs are identical, and reports the speedup.
// build_roc timing is included for scale context.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "longmatch/ingest.hpp"
#include "longmatch/longitudinal.hpp"
#include "longmatch/openset.hpp"
#include "longmatch/parallel.hpp"
#include "longmatch/rng.hpp"
#include "longmatch/roc.hpp"
#include "longmatch/synthgen.hpp"
#include "support/fixtures.hpp"

using namespace longmatch;

namespace {

double seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* kernel, const char* size, double serial, double parallel, bool identical) {
  std::printf("%-24s %-28s %9.3fs %9.3fs %7.2fx %s\n", kernel, size, serial, parallel,
              serial / parallel, identical ? "outputs identical" : "OUTPUT MISMATCH");
}

int bench_cosine(int threads, bool quick) {
  const int n_images = quick ? 120 : 700;
  const std::size_t dim = 128;

  std::vector<Subject> subjects;
  EmbeddingTable table;
  table.dim = dim;
  RandomStream rng(1);
  for (int i = 0; i < n_images; ++i) {
    Subject subject;
    subject.subject_id = "s" + std::to_string(i);
    subject.acquisitions = {{subject.subject_id + "_0", 5.0}};
    subjects.push_back(std::move(subject));
    table.image_ids.push_back("s" + std::to_string(i) + "_0");
    for (std::size_t d = 0; d < dim; ++d) table.values.push_back(rng.normal());
  }
  const auto dataset = ScoreDataset::build(std::move(subjects), {});
  const auto pairs = enumerate_pairs(dataset, PairMode::impostor);

  auto t0 = std::chrono::steady_clock::now();
  const auto serial = score_pairs(dataset, table, pairs, "cos", 1);
  const double t_serial = seconds(t0);
  t0 = std::chrono::steady_clock::now();
  const auto parallel = score_pairs(dataset, table, pairs, "cos", threads);
  const double t_parallel = seconds(t0);

  bool identical = serial.size() == parallel.size();
  for (std::size_t i = 0; identical && i < serial.size(); ++i) {
    identical = serial[i].raw_score == parallel[i].raw_score;
  }
  const std::string size = std::to_string(pairs.size()) + " pairs x " + std::to_string(dim) + "d";
  row("cosine scoring", size.c_str(), t_serial, t_parallel, identical);
  return identical ? 0 : 1;
}

int bench_openset(int threads, bool quick) {
  GeneratorSpec spec = clf_shaped_spec(2);
  spec.n_subjects = quick ? 60 : 500;
  spec.total_images = std::nullopt;
  spec.n_nonmated_subjects = quick ? 25 : 400;
  spec.matcher_ids = {"m"};
  const auto [dataset, truth] = generate_longitudinal(spec);
  const auto protocol = default_open_set_protocol(dataset);

  auto t0 = std::chrono::steady_clock::now();
  const auto serial = open_set_identify(dataset, "m", protocol, 1);
  const double t_serial = seconds(t0);
  t0 = std::chrono::steady_clock::now();
  const auto parallel = open_set_identify(dataset, "m", protocol, threads);
  const double t_parallel = seconds(t0);

  bool identical = serial.cells.size() == parallel.cells.size();
  for (std::size_t i = 0; identical && i < serial.cells.size(); ++i) {
    identical = serial.cells[i].dir == parallel.cells[i].dir &&
                serial.cells[i].threshold == parallel.cells[i].threshold;
  }
  const std::string size = std::to_string(serial.n_gallery) + " gallery x " +
                           std::to_string(serial.n_mated + serial.n_nonmated) + " probes";
  row("open-set evaluation", size.c_str(), t_serial, t_parallel, identical);
  return identical ? 0 : 1;
}

int bench_bootstrap(int threads, bool quick) {
  lmm_gen::Truth truth;
  truth.kind = ModelKind::bt;
  truth.gamma = {0.5, -0.22};
  truth.var_intercept = 0.36;
  truth.var_slope = 0.0625;
  truth.cov = -0.09;
  truth.residual_var = 0.25;
  const auto obs = lmm_gen::observations(truth, quick ? 100 : 921, 3, 11);

  BootstrapOptions options;
  options.replicates = quick ? 40 : 400;
  options.master_seed = 3;

  options.threads = 1;
  auto t0 = std::chrono::steady_clock::now();
  const auto serial = bootstrap_fit(obs, ModelKind::bt, options);
  const double t_serial = seconds(t0);
  options.threads = threads;
  t0 = std::chrono::steady_clock::now();
  const auto parallel = bootstrap_fit(obs, ModelKind::bt, options);
  const double t_parallel = seconds(t0);

  const bool identical = serial.replicate_values == parallel.replicate_values &&
                         serial.means == parallel.means;
  const std::string size = "B=" + std::to_string(options.replicates) + " on " +
                           std::to_string(serial.replicate_values.cols()) + " params, " +
                           std::to_string(obs.size()) + " obs";
  row("bootstrap replicates", size.c_str(), t_serial, t_parallel, identical);
  return identical ? 0 : 1;
}

void bench_roc(bool quick) {
  const std::size_t n_impostor = quick ? 200000 : 3500000;
  auto [genuine, impostor] = generate_match_scores(6000, n_impostor, 3.0, 1.0, 0.0, 1.0, 4);
  const auto t0 = std::chrono::steady_clock::now();
  const auto roc = build_roc(std::move(genuine), std::move(impostor));
  const auto op = roc.operating_point(0.001);
  const double elapsed = seconds(t0);
  std::printf("%-24s %-28s %9.3fs (tar@0.1%%far = %.3f)\n", "roc build (serial)",
              (std::to_string(n_impostor) + " impostors").c_str(), elapsed, op.tar);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = hardware_threads();
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      quick = true;
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      threads = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--threads N]\n", argv[0]);
      return 2;
    }
  }

  std::printf("kernel                   size                            serial  parallel  speedup (threads=%d)\n",
              threads);
  int failures = 0;
  failures += bench_cosine(threads, quick);
  failures += bench_openset(threads, quick);
  failures += bench_bootstrap(threads, quick);
  bench_roc(quick);
  return failures == 0 ? 0 : 1;
}
