#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "longmatch/dataset.hpp"
#include "longmatch/lmm.hpp"
#include "longmatch/rng.hpp"

namespace fixtures {

// Two subjects x two images plus four records, the smallest interesting
// dataset.
inline longmatch::ScoreDataset tiny_dataset() {
  using namespace longmatch;
  std::vector<Subject> subjects{
      Subject{"s1", Gender::girl, {{"a1", 5.0}, {"a2", 7.0}}},
      Subject{"s2", Gender::boy, {{"b1", 6.0}, {"b2", 9.0}}},
  };
  std::vector<ComparisonRecord> records{
      {"m", "a2", "a1", 0.9},
      {"m", "b2", "b1", 0.8},
      {"m", "a1", "b1", 0.1},
      {"m", "a2", "b2", 0.2},
  };
  return ScoreDataset::build(std::move(subjects), records);
}

// Random small dataset for property tests: n_subjects with 1-5 images
// each, every unordered pair scored by one matcher.
inline longmatch::ScoreDataset random_dataset(std::uint64_t seed, int n_subjects,
                                              int max_images_per_subject = 5) {
  using namespace longmatch;
  RandomStream rng(seed);
  std::vector<Subject> subjects;
  for (int i = 0; i < n_subjects; ++i) {
    Subject subject;
    subject.subject_id = "s" + std::to_string(i);
    subject.gender = rng.uniform01() < 0.5 ? Gender::boy : Gender::girl;
    const int n_images = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_images_per_subject)));
    double age = rng.uniform(2.0, 12.0);
    for (int j = 0; j < n_images; ++j) {
      subject.acquisitions.push_back(
          Acquisition{subject.subject_id + "_" + std::to_string(j), age});
      age += rng.uniform(0.5, 2.0);
    }
    subjects.push_back(std::move(subject));
  }

  std::vector<ComparisonRecord> records;
  std::vector<std::string> all_images;
  for (const auto& subject : subjects) {
    for (const auto& acq : subject.acquisitions) all_images.push_back(acq.image_id);
  }
  for (std::size_t a = 0; a < all_images.size(); ++a) {
    for (std::size_t b = a + 1; b < all_images.size(); ++b) {
      records.push_back(ComparisonRecord{"m", all_images[a], all_images[b], rng.normal()});
    }
  }
  return ScoreDataset::build(std::move(subjects), records);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("longmatch_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace fixtures

// Direct observation-level generator for mixed-model tests (lighter than
// a full dataset): truth gamma in design order, PSD G, residual variance.
namespace lmm_gen {

struct Truth {
  longmatch::ModelKind kind = longmatch::ModelKind::bt;
  std::vector<double> gamma;
  double var_intercept = 0.0;
  double var_slope = 0.0;
  double cov = 0.0;
  double residual_var = 1.0;
};

inline std::vector<longmatch::LongitudinalObservation> observations(
    const Truth& truth, int n_subjects, int obs_per_subject, std::uint64_t seed,
    double boy_fraction = 0.5, double gap_lo = 0.6, double gap_hi = 1.6) {
  using namespace longmatch;
  RandomStream rng(seed);
  const double l11 = std::sqrt(std::max(truth.var_intercept, 0.0));
  const double l21 = l11 > 0.0 ? truth.cov / l11 : 0.0;
  const double l22 = std::sqrt(std::max(truth.var_slope - l21 * l21, 0.0));
  const double resid_sd = std::sqrt(truth.residual_var);

  std::vector<LongitudinalObservation> out;
  for (int i = 0; i < n_subjects; ++i) {
    const Gender gender = rng.uniform01() < boy_fraction ? Gender::boy : Gender::girl;
    const double g = gender == Gender::boy ? 1.0 : 0.0;
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double b0 = l11 * z0;
    const double b1 = l21 * z0 + l22 * z1;
    double dt = 0.0;
    for (int j = 0; j < obs_per_subject; ++j) {
      dt += rng.uniform(gap_lo, gap_hi);
      double mu = 0.0;
      if (truth.kind == ModelKind::bt) {
        mu = truth.gamma[0] + truth.gamma[1] * dt;
      } else {
        mu = truth.gamma[0] + truth.gamma[1] * g + (truth.gamma[2] + truth.gamma[3] * g) * dt;
      }
      out.push_back(LongitudinalObservation{
          "s" + std::to_string(i), dt,
          mu + b0 + b1 * dt + (resid_sd > 0.0 ? rng.normal(0.0, resid_sd) : 0.0), gender});
    }
  }
  return out;
}

}  // namespace lmm_gen
