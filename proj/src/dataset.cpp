#include "longmatch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "longmatch/stats.hpp"

namespace longmatch {

std::optional<Gender> parse_gender_token(std::string_view token) {
  std::string t;
  t.reserve(token.size());
  for (char c : token) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t.empty()) return std::nullopt;
  if (t == "0" || t == "f" || t == "girl") return Gender::girl;
  if (t == "1" || t == "m" || t == "boy") return Gender::boy;
  throw validation_error("unrecognized gender token '" + std::string(token) + "'");
}

const char* gender_token(Gender g) { return g == Gender::girl ? "0" : "1"; }

std::uint64_t ScoreDataset::pack_pair(std::int32_t a, std::int32_t b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

namespace {

// Ids travel through the flat CSV schemas, so they must not contain field
// or line separators and must not look like a comment line.
void check_identifier(const std::string& id, const char* what) {
  if (id.empty()) throw validation_error(std::string("empty ") + what);
  if (id.front() == '#' || id.find_first_of(",\r\n") != std::string::npos) {
    throw validation_error(std::string(what) + " '" + id + "' contains characters not allowed in ids");
  }
}

}  // namespace

ScoreDataset ScoreDataset::build(std::vector<Subject> subjects, std::span<const ComparisonRecord> records) {
  ScoreDataset ds;

  std::sort(subjects.begin(), subjects.end(),
            [](const Subject& a, const Subject& b) { return a.subject_id < b.subject_id; });
  for (std::size_t i = 1; i < subjects.size(); ++i) {
    if (subjects[i].subject_id == subjects[i - 1].subject_id) {
      throw validation_error("duplicate subject_id '" + subjects[i].subject_id + "'");
    }
  }

  for (auto& subject : subjects) {
    check_identifier(subject.subject_id, "subject_id");
    for (const auto& acq : subject.acquisitions) check_identifier(acq.image_id, "image_id");
    if (subject.acquisitions.empty()) {
      throw validation_error("subject '" + subject.subject_id + "' has no acquisitions");
    }
    std::sort(subject.acquisitions.begin(), subject.acquisitions.end(),
              [](const Acquisition& a, const Acquisition& b) { return a.age_years < b.age_years; });
    for (std::size_t j = 0; j < subject.acquisitions.size(); ++j) {
      const auto& acq = subject.acquisitions[j];
      if (!std::isfinite(acq.age_years) || acq.age_years < 0.0) {
        throw validation_error("image '" + acq.image_id + "' of subject '" + subject.subject_id +
                               "' has invalid age " + std::to_string(acq.age_years));
      }
      if (j > 0 && !(subject.acquisitions[j - 1].age_years < acq.age_years)) {
        throw validation_error("subject '" + subject.subject_id +
                               "' has acquisitions without strictly increasing ages");
      }
    }
  }
  ds.subjects_ = std::move(subjects);

  // Intern image ids in lexicographic order.
  for (std::size_t si = 0; si < ds.subjects_.size(); ++si) {
    const auto& subject = ds.subjects_[si];
    for (std::size_t ai = 0; ai < subject.acquisitions.size(); ++ai) {
      ds.images_.push_back(Image{subject.acquisitions[ai].image_id,
                                 ImageRef{static_cast<std::int32_t>(si), static_cast<std::int32_t>(ai)}});
    }
  }
  std::sort(ds.images_.begin(), ds.images_.end(),
            [](const Image& a, const Image& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < ds.images_.size(); ++i) {
    if (i > 0 && ds.images_[i].id == ds.images_[i - 1].id) {
      throw validation_error("duplicate image_id '" + ds.images_[i].id + "'");
    }
    ds.image_index_.emplace(ds.images_[i].id, static_cast<std::int32_t>(i));
  }

  std::map<std::string, std::vector<std::pair<std::uint64_t, double>>> per_matcher;
  for (const auto& rec : records) {
    const std::int32_t probe = ds.image_index(rec.probe_image_id);
    const std::int32_t ref = ds.image_index(rec.reference_image_id);
    if (probe < 0) {
      throw validation_error("record references unknown image_id '" + rec.probe_image_id + "'");
    }
    if (ref < 0) {
      throw validation_error("record references unknown image_id '" + rec.reference_image_id + "'");
    }
    if (probe == ref) {
      throw validation_error("record compares image '" + rec.probe_image_id + "' with itself");
    }
    if (!std::isfinite(rec.raw_score)) {
      throw validation_error("record (" + rec.probe_image_id + ", " + rec.reference_image_id +
                             ") has non-finite score");
    }
    check_identifier(rec.matcher_id, "matcher_id");
    per_matcher[rec.matcher_id].emplace_back(pack_pair(probe, ref), rec.raw_score);
  }
  for (auto& [matcher, pairs] : per_matcher) {
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (pairs[i].first == pairs[i - 1].first) {
        const auto hi = static_cast<std::int32_t>(pairs[i].first & 0xffffffffULL);
        const auto lo = static_cast<std::int32_t>(pairs[i].first >> 32);
        throw validation_error("duplicate record for matcher '" + matcher + "' pair (" +
                               ds.image_id(lo) + ", " + ds.image_id(hi) + ")");
      }
    }
    ds.matcher_ids_.push_back(matcher);
    ds.scores_.push_back(MatcherScores{matcher, std::move(pairs)});
  }
  return ds;
}

bool ScoreDataset::has_matcher(std::string_view matcher) const { return find_matcher(matcher) != nullptr; }

std::int32_t ScoreDataset::image_index(std::string_view image_id) const {
  const auto it = image_index_.find(std::string(image_id));
  return it == image_index_.end() ? -1 : it->second;
}

const std::string& ScoreDataset::image_id(std::int32_t index) const {
  return images_[static_cast<std::size_t>(index)].id;
}

double ScoreDataset::image_age(std::int32_t index) const {
  const ImageRef ref = images_[static_cast<std::size_t>(index)].ref;
  return subjects_[static_cast<std::size_t>(ref.subject)]
      .acquisitions[static_cast<std::size_t>(ref.acquisition)]
      .age_years;
}

const Subject& ScoreDataset::image_subject(std::int32_t index) const {
  return subjects_[static_cast<std::size_t>(images_[static_cast<std::size_t>(index)].ref.subject)];
}

bool ScoreDataset::genuine_pair(std::int32_t img_a, std::int32_t img_b) const {
  return images_[static_cast<std::size_t>(img_a)].ref.subject ==
         images_[static_cast<std::size_t>(img_b)].ref.subject;
}

std::size_t ScoreDataset::record_count() const {
  std::size_t n = 0;
  for (const auto& m : scores_) n += m.by_pair.size();
  return n;
}

std::size_t ScoreDataset::record_count(std::string_view matcher) const {
  const auto* m = find_matcher(matcher);
  return m == nullptr ? 0 : m->by_pair.size();
}

const ScoreDataset::MatcherScores* ScoreDataset::find_matcher(std::string_view matcher) const {
  for (const auto& m : scores_) {
    if (m.matcher_id == matcher) return &m;
  }
  return nullptr;
}

std::optional<double> ScoreDataset::score(std::string_view matcher, std::int32_t img_a,
                                          std::int32_t img_b) const {
  const auto* m = find_matcher(matcher);
  if (m == nullptr) return std::nullopt;
  const std::uint64_t key = pack_pair(img_a, img_b);
  const auto it = std::lower_bound(m->by_pair.begin(), m->by_pair.end(), key,
                                   [](const auto& entry, std::uint64_t k) { return entry.first < k; });
  if (it == m->by_pair.end() || it->first != key) return std::nullopt;
  return it->second;
}

std::span<const std::pair<std::uint64_t, double>> ScoreDataset::matcher_scores(
    std::string_view matcher) const {
  const auto* m = find_matcher(matcher);
  if (m == nullptr) throw validation_error("unknown matcher '" + std::string(matcher) + "'");
  return m->by_pair;
}

std::vector<ComparisonRecord> ScoreDataset::canonical_records() const {
  std::vector<ComparisonRecord> out;
  out.reserve(record_count());
  for (const auto& m : scores_) {
    for (const auto& [key, score] : m.by_pair) {
      const auto lo = static_cast<std::int32_t>(key >> 32);
      const auto hi = static_cast<std::int32_t>(key & 0xffffffffULL);
      out.push_back(ComparisonRecord{m.matcher_id, image_id(lo), image_id(hi), score});
    }
  }
  return out;
}

ScoreDataset ScoreDataset::with_records(std::span<const ComparisonRecord> extra) const {
  std::vector<ComparisonRecord> all = canonical_records();
  all.insert(all.end(), extra.begin(), extra.end());
  return build(subjects_, all);
}

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw validation_error("cosine_score: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw validation_error("cosine_score: empty vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw validation_error("cosine_score: zero-norm vector");
  const double value = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(value, -1.0, 1.0);
}

std::vector<PairRef> enumerate_pairs(const ScoreDataset& dataset, PairMode mode) {
  std::vector<PairRef> out;
  const auto& subjects = dataset.subjects();

  if (mode == PairMode::enrollment_anchored || mode == PairMode::all_pairs) {
    for (const auto& subject : subjects) {
      const auto n = subject.acquisitions.size();
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t first_ref = mode == PairMode::enrollment_anchored ? 0 : j + 1;
        if (mode == PairMode::enrollment_anchored) {
          if (j == 0) continue;
          const std::int32_t probe = dataset.image_index(subject.acquisitions[j].image_id);
          const std::int32_t ref = dataset.image_index(subject.acquisitions[0].image_id);
          out.push_back(PairRef{probe, ref, true});
        } else {
          for (std::size_t k = first_ref; k < n; ++k) {
            const std::int32_t probe = dataset.image_index(subject.acquisitions[k].image_id);
            const std::int32_t ref = dataset.image_index(subject.acquisitions[j].image_id);
            out.push_back(PairRef{probe, ref, true});
          }
        }
      }
    }
    return out;
  }

  // Impostor: all cross-subject unordered pairs, in subject order.
  std::vector<std::vector<std::int32_t>> images_by_subject(subjects.size());
  for (std::size_t si = 0; si < subjects.size(); ++si) {
    for (const auto& acq : subjects[si].acquisitions) {
      images_by_subject[si].push_back(dataset.image_index(acq.image_id));
    }
  }
  for (std::size_t si = 0; si < subjects.size(); ++si) {
    for (std::size_t sk = si + 1; sk < subjects.size(); ++sk) {
      for (const std::int32_t a : images_by_subject[si]) {
        for (const std::int32_t b : images_by_subject[sk]) {
          out.push_back(PairRef{a, b, false});
        }
      }
    }
  }
  return out;
}

std::pair<StandardizationParams, std::vector<double>> standardize_genuine(std::span<const double> scores) {
  if (scores.size() < 2) {
    throw validation_error("standardize_genuine: need at least 2 scores, got " +
                           std::to_string(scores.size()));
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) {
    throw validation_error("standardize_genuine: zero dispersion (all scores identical)");
  }
  // Twice-centered: removing the residual mean of the first pass keeps the
  // output mean at machine zero even when |mean| >> sd.
  const double mu = mean(scores);
  std::vector<double> centered;
  centered.reserve(scores.size());
  for (double s : scores) centered.push_back(s - mu);
  const double residual_mu = mean(centered);
  for (double& c : centered) c -= residual_mu;

  const double var = sample_variance(centered, 0.0);
  if (var == 0.0) throw validation_error("standardize_genuine: zero dispersion (all scores identical)");
  const double sd = std::sqrt(var);
  for (double& c : centered) c /= sd;
  return {StandardizationParams{mu + residual_mu, sd}, std::move(centered)};
}

ObservationSet make_observations(const ScoreDataset& dataset, std::string_view matcher,
                                 StandardizationSet std_set) {
  if (!dataset.has_matcher(matcher)) {
    throw validation_error("unknown matcher '" + std::string(matcher) + "'");
  }

  const auto score_of = [&](const PairRef& pair) {
    const auto s = dataset.score(matcher, pair.probe_image, pair.reference_image);
    if (!s.has_value()) {
      throw validation_error("matcher '" + std::string(matcher) + "' is missing the genuine pair (" +
                             dataset.image_id(pair.probe_image) + ", " +
                             dataset.image_id(pair.reference_image) + ")");
    }
    return *s;
  };

  const std::vector<PairRef> anchored = enumerate_pairs(dataset, PairMode::enrollment_anchored);
  std::vector<double> anchored_scores;
  anchored_scores.reserve(anchored.size());
  for (const auto& pair : anchored) anchored_scores.push_back(score_of(pair));

  StandardizationParams params;
  if (std_set == StandardizationSet::enrollment_anchored) {
    params = standardize_genuine(anchored_scores).first;
  } else {
    const std::vector<PairRef> all = enumerate_pairs(dataset, PairMode::all_pairs);
    std::vector<double> all_scores;
    all_scores.reserve(all.size());
    for (const auto& pair : all) all_scores.push_back(score_of(pair));
    params = standardize_genuine(all_scores).first;
  }

  ObservationSet set;
  set.matcher_id = std::string(matcher);
  set.std_set = std_set;
  set.params = params;
  set.observations.reserve(anchored.size());
  for (std::size_t i = 0; i < anchored.size(); ++i) {
    const auto& pair = anchored[i];
    const Subject& subject = dataset.image_subject(pair.probe_image);
    const double enrollment_age = subject.acquisitions.front().age_years;
    const double dt = dataset.image_age(pair.probe_image) - enrollment_age;
    set.observations.push_back(LongitudinalObservation{
        subject.subject_id, dt, (anchored_scores[i] - params.mean) / params.std_dev, subject.gender});
  }
  return set;
}

namespace {

std::vector<std::pair<int, std::size_t>> histogram_to_sorted(const std::map<int, std::size_t>& h) {
  return {h.begin(), h.end()};
}

}  // namespace

DatasetSummary summarize(const ScoreDataset& dataset) {
  DatasetSummary s;
  s.n_subjects = dataset.subject_count();
  s.n_images = dataset.image_count();

  std::map<int, std::size_t> per_subject, ages, enroll, lapse;
  for (const auto& subject : dataset.subjects()) {
    if (subject.gender == Gender::boy) {
      ++s.n_boys;
    } else if (subject.gender == Gender::girl) {
      ++s.n_girls;
    } else {
      ++s.n_unknown_gender;
    }
    ++per_subject[static_cast<int>(subject.acquisitions.size())];
    for (const auto& acq : subject.acquisitions) ++ages[static_cast<int>(std::floor(acq.age_years))];
    ++enroll[static_cast<int>(std::floor(subject.acquisitions.front().age_years))];
    const double span =
        subject.acquisitions.back().age_years - subject.acquisitions.front().age_years;
    ++lapse[static_cast<int>(std::lround(span))];
  }
  s.images_per_subject = histogram_to_sorted(per_subject);
  s.acquisition_age_years = histogram_to_sorted(ages);
  s.enrollment_age_years = histogram_to_sorted(enroll);
  s.lapse_years = histogram_to_sorted(lapse);

  for (const auto& matcher : dataset.matcher_ids()) {
    MatcherCounts counts;
    counts.matcher_id = matcher;
    for (const auto& [key, score] : dataset.matcher_scores(matcher)) {
      (void)score;
      ++counts.n_records;
      const auto lo = static_cast<std::int32_t>(key >> 32);
      const auto hi = static_cast<std::int32_t>(key & 0xffffffffULL);
      if (dataset.genuine_pair(lo, hi)) {
        ++counts.n_genuine;
      } else {
        ++counts.n_impostor;
      }
    }
    s.matchers.push_back(std::move(counts));
  }
  return s;
}

}  // namespace longmatch
