#include "longmatch/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longmatch/rng.hpp"

namespace longmatch {

namespace {

// Stream layout (see rng.hpp): stream 0 draws demographics and ages;
// matcher m draws genuine scores from stream 1 + 2m and impostor scores
// from stream 2 + 2m, so adding matchers never disturbs earlier ones.
constexpr std::uint64_t kDemographicsStream = 0;
std::uint64_t genuine_stream(std::size_t matcher) { return 1 + 2 * matcher; }
std::uint64_t impostor_stream(std::size_t matcher) { return 2 + 2 * matcher; }

void validate_spec(const GeneratorSpec& spec) {
  if (spec.n_subjects < 1) throw validation_error("synthgen: n_subjects must be >= 1");
  if (spec.n_nonmated_subjects < 0) throw validation_error("synthgen: negative distractor count");
  const auto& sessions = spec.sessions_per_subject;
  if (sessions.values.empty() || sessions.values.size() != sessions.weights.size()) {
    throw validation_error("synthgen: session distribution values/weights mismatch");
  }
  for (int v : sessions.values) {
    if (v < 2 || v > 8) throw validation_error("synthgen: session counts must lie in [2, 8]");
  }
  double weight_sum = 0.0;
  for (double w : sessions.weights) {
    if (w < 0.0) throw validation_error("synthgen: negative session weight");
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw validation_error("synthgen: session weights must sum > 0");
  if (!(spec.enrollment_age.lo >= 0.0) || spec.enrollment_age.hi < spec.enrollment_age.lo) {
    throw validation_error("synthgen: invalid enrollment age range");
  }
  if (!(spec.session_gap.lo > 0.0) || spec.session_gap.hi < spec.session_gap.lo) {
    throw validation_error("synthgen: session gaps must be positive");
  }
  if (!(spec.boy_fraction >= 0.0 && spec.boy_fraction <= 1.0)) {
    throw validation_error("synthgen: boy_fraction outside [0, 1]");
  }
  if (static_cast<int>(spec.gamma.size()) != fixed_effects_dim(spec.truth_model)) {
    throw validation_error("synthgen: gamma length does not match the truth model");
  }
  if (!spec.random_effects.is_psd(1e-12)) {
    throw validation_error("synthgen: random-effects covariance not PSD");
  }
  if (!(spec.residual_var >= 0.0)) throw validation_error("synthgen: negative residual variance");
  if (!(spec.impostor_sd > 0.0)) throw validation_error("synthgen: impostor sd must be > 0");
  if (spec.matcher_ids.empty()) throw validation_error("synthgen: need at least one matcher id");
  if (spec.total_images.has_value()) {
    const int lo = *std::min_element(sessions.values.begin(), sessions.values.end());
    const int hi = *std::max_element(sessions.values.begin(), sessions.values.end());
    if (*spec.total_images < spec.n_subjects * lo || *spec.total_images > spec.n_subjects * hi) {
      throw validation_error("synthgen: total_images infeasible for the session distribution");
    }
  }
}

std::string padded(const char* prefix, int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%06d", prefix, value);
  return buf;
}

// Lower Cholesky factor of a PSD 2x2 covariance (zero-variance safe).
std::array<double, 3> chol2(const RandomEffectsCovariance& g) {
  const double l11 = std::sqrt(std::max(g.var_intercept, 0.0));
  const double l21 = l11 > 0.0 ? g.cov / l11 : 0.0;
  const double l22 = std::sqrt(std::max(g.var_slope - l21 * l21, 0.0));
  return {l11, l21, l22};
}

}  // namespace

std::pair<double, double> draw_random_effects(RandomStream& stream,
                                              const RandomEffectsCovariance& g) {
  const std::array<double, 3> l = chol2(g);
  const double z0 = stream.normal();
  const double z1 = stream.normal();
  return {l[0] * z0, l[1] * z0 + l[2] * z1};
}

GeneratorSpec clf_shaped_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.n_subjects = 919;
  spec.total_images = 3682;
  spec.sessions_per_subject = DiscreteCounts{{2, 3, 4, 5, 6}, {0.12, 0.22, 0.30, 0.22, 0.14}};
  spec.enrollment_age = UniformRange{2.0, 13.0};
  spec.session_gap = UniformRange{0.7, 1.5};
  spec.boy_fraction = 0.657;
  spec.n_nonmated_subjects = 756;
  spec.truth_model = ModelKind::bt;
  spec.gamma = {5.7, -0.5};
  spec.random_effects = RandomEffectsCovariance{1.69, 0.0625, -0.1};
  spec.residual_var = 1.69;
  spec.impostor_mean = 0.0;
  spec.impostor_sd = 1.0;
  spec.impostor_pairs = ImpostorPairs::anchored;
  spec.matcher_ids = {"synth-a", "synth-b"};
  spec.seed = seed;
  return spec;
}

std::pair<ScoreDataset, GeneratedTruth> generate_longitudinal(const GeneratorSpec& spec) {
  validate_spec(spec);

  RandomStream demo(derive_stream_seed(spec.seed, kDemographicsStream));
  const int n_main = spec.n_subjects;
  const int n_distractor = spec.n_nonmated_subjects;

  std::vector<Gender> genders(static_cast<std::size_t>(n_main + n_distractor));
  std::vector<int> counts(static_cast<std::size_t>(n_main));
  for (int i = 0; i < n_main; ++i) {
    genders[static_cast<std::size_t>(i)] =
        demo.uniform01() < spec.boy_fraction ? Gender::boy : Gender::girl;
    counts[static_cast<std::size_t>(i)] =
        spec.sessions_per_subject.values[demo.discrete(spec.sessions_per_subject.weights)];
  }

  if (spec.total_images.has_value()) {
    const int lo = *std::min_element(spec.sessions_per_subject.values.begin(),
                                     spec.sessions_per_subject.values.end());
    const int hi = *std::max_element(spec.sessions_per_subject.values.begin(),
                                     spec.sessions_per_subject.values.end());
    int total = std::accumulate(counts.begin(), counts.end(), 0);
    // Deterministic round-robin repair toward the exact image total.
    while (total != *spec.total_images) {
      bool changed = false;
      for (int i = 0; i < n_main && total != *spec.total_images; ++i) {
        auto& c = counts[static_cast<std::size_t>(i)];
        if (total < *spec.total_images && c < hi) {
          ++c;
          ++total;
          changed = true;
        } else if (total > *spec.total_images && c > lo) {
          --c;
          --total;
          changed = true;
        }
      }
      if (!changed) throw validation_error("synthgen: cannot reach the requested image total");
    }
  }

  std::vector<Subject> subjects;
  subjects.reserve(static_cast<std::size_t>(n_main + n_distractor));
  std::vector<std::vector<double>> ages(static_cast<std::size_t>(n_main));
  for (int i = 0; i < n_main; ++i) {
    Subject subject;
    subject.subject_id = padded("s", i);
    subject.gender = genders[static_cast<std::size_t>(i)];
    double age = demo.uniform(spec.enrollment_age.lo, spec.enrollment_age.hi);
    for (int j = 0; j < counts[static_cast<std::size_t>(i)]; ++j) {
      subject.acquisitions.push_back(
          Acquisition{subject.subject_id + "_" + std::to_string(j), age});
      ages[static_cast<std::size_t>(i)].push_back(age);
      age += demo.uniform(spec.session_gap.lo, spec.session_gap.hi);
    }
    subjects.push_back(std::move(subject));
  }
  for (int d = 0; d < n_distractor; ++d) {
    genders[static_cast<std::size_t>(n_main + d)] =
        demo.uniform01() < spec.boy_fraction ? Gender::boy : Gender::girl;
    Subject subject;
    subject.subject_id = padded("d", d);
    subject.gender = genders[static_cast<std::size_t>(n_main + d)];
    subject.acquisitions.push_back(Acquisition{
        subject.subject_id + "_0", demo.uniform(spec.enrollment_age.lo, spec.enrollment_age.hi)});
    subjects.push_back(std::move(subject));
  }

  const auto fixed_mean = [&](Gender gender, double dt) {
    if (spec.truth_model == ModelKind::bt) {
      return spec.gamma[0] + spec.gamma[1] * dt;
    }
    const double g = gender == Gender::boy ? 1.0 : 0.0;
    return spec.gamma[0] + spec.gamma[1] * g + (spec.gamma[2] + spec.gamma[3] * g) * dt;
  };
  const double residual_sd = std::sqrt(spec.residual_var);

  std::vector<ComparisonRecord> records;
  for (std::size_t mi = 0; mi < spec.matcher_ids.size(); ++mi) {
    const std::string& matcher = spec.matcher_ids[mi];

    // Genuine: all same-subject pairs, trend model over the pair lapse.
    RandomStream gen(derive_stream_seed(spec.seed, genuine_stream(mi)));
    for (int i = 0; i < n_main; ++i) {
      const auto& subject = subjects[static_cast<std::size_t>(i)];
      const auto [b0, b1] = draw_random_effects(gen, spec.random_effects);
      const auto& subject_ages = ages[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < subject_ages.size(); ++j) {
        for (std::size_t k = j + 1; k < subject_ages.size(); ++k) {
          const double dt = subject_ages[k] - subject_ages[j];
          const double score = fixed_mean(*subject.gender, dt) + b0 + b1 * dt +
                               (residual_sd > 0.0 ? gen.normal(0.0, residual_sd) : 0.0);
          records.push_back(ComparisonRecord{matcher, subject.acquisitions[k].image_id,
                                             subject.acquisitions[j].image_id, score});
        }
      }
    }

    // Impostors.
    RandomStream imp(derive_stream_seed(spec.seed, impostor_stream(mi)));
    const auto impostor_record = [&](const std::string& probe, const std::string& reference) {
      records.push_back(ComparisonRecord{matcher, probe, reference,
                                         imp.normal(spec.impostor_mean, spec.impostor_sd)});
    };
    if (spec.impostor_pairs == ImpostorPairs::anchored) {
      for (int i = 0; i < n_main; ++i) {
        for (int k = i + 1; k < n_main; ++k) {
          impostor_record(subjects[static_cast<std::size_t>(i)].acquisitions.front().image_id,
                          subjects[static_cast<std::size_t>(k)].acquisitions.front().image_id);
        }
      }
      for (int i = 0; i < n_main; ++i) {
        const auto& enrollment = subjects[static_cast<std::size_t>(i)].acquisitions.front().image_id;
        for (int k = 0; k < n_main; ++k) {
          if (k == i) continue;
          const auto& other = subjects[static_cast<std::size_t>(k)];
          for (std::size_t j = 1; j < other.acquisitions.size(); ++j) {
            impostor_record(other.acquisitions[j].image_id, enrollment);
          }
        }
      }
      for (int d = 0; d < n_distractor; ++d) {
        const auto& probe = subjects[static_cast<std::size_t>(n_main + d)].acquisitions.front().image_id;
        for (int i = 0; i < n_main; ++i) {
          impostor_record(probe, subjects[static_cast<std::size_t>(i)].acquisitions.front().image_id);
        }
      }
    } else {
      for (std::size_t a = 0; a < subjects.size(); ++a) {
        for (std::size_t b = a + 1; b < subjects.size(); ++b) {
          for (const auto& acq_a : subjects[a].acquisitions) {
            for (const auto& acq_b : subjects[b].acquisitions) {
              impostor_record(acq_a.image_id, acq_b.image_id);
            }
          }
        }
      }
    }
  }

  GeneratedTruth truth;
  truth.model = spec.truth_model;
  truth.gamma = spec.gamma;
  truth.random_effects = spec.random_effects;
  truth.residual_var = spec.residual_var;
  truth.impostor_mean = spec.impostor_mean;
  truth.impostor_sd = spec.impostor_sd;
  truth.seed = spec.seed;
  return {ScoreDataset::build(std::move(subjects), records), truth};
}

std::pair<std::vector<double>, std::vector<double>> generate_match_scores(
    std::size_t n_genuine, std::size_t n_impostor, double genuine_mean, double genuine_sd,
    double impostor_mean, double impostor_sd, std::uint64_t seed) {
  if (!(genuine_sd > 0.0) || !(impostor_sd > 0.0)) {
    throw validation_error("generate_match_scores: standard deviations must be > 0");
  }
  std::vector<double> genuine(n_genuine), impostor(n_impostor);
  RandomStream gen(derive_stream_seed(seed, 0));
  for (auto& s : genuine) s = gen.normal(genuine_mean, genuine_sd);
  RandomStream imp(derive_stream_seed(seed, 1));
  for (auto& s : impostor) s = imp.normal(impostor_mean, impostor_sd);
  return {std::move(genuine), std::move(impostor)};
}

}  // namespace longmatch
