#include "longmatch/openset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "longmatch/parallel.hpp"
#include "longmatch/roc.hpp"

namespace longmatch {

OpenSetProtocol default_open_set_protocol(const ScoreDataset& dataset,
                                          const OpenSetProtocolOptions& options) {
  OpenSetProtocol protocol;
  protocol.ranks = options.ranks;
  protocol.far_targets = options.far_targets;
  for (const auto& subject : dataset.subjects()) {
    if (subject.acquisitions.size() >= 2) {
      protocol.gallery_images.push_back(subject.acquisitions.front().image_id);
      const double enrollment_age = subject.acquisitions.front().age_years;
      for (std::size_t j = 1; j < subject.acquisitions.size(); ++j) {
        if (options.probe_lapse_years.has_value()) {
          const long lapse = std::lround(subject.acquisitions[j].age_years - enrollment_age);
          if (lapse != *options.probe_lapse_years) continue;
        }
        protocol.mated_probes.push_back(subject.acquisitions[j].image_id);
      }
    } else {
      protocol.nonmated_probes.push_back(subject.acquisitions.front().image_id);
    }
  }
  return protocol;
}

namespace {

struct ResolvedProtocol {
  std::vector<std::int32_t> gallery;
  std::vector<std::int32_t> mated;
  std::vector<std::int32_t> nonmated;
};

ResolvedProtocol resolve_and_validate(const ScoreDataset& dataset, const OpenSetProtocol& protocol) {
  ResolvedProtocol r;
  const auto resolve = [&](const std::string& id, const char* role) {
    const std::int32_t idx = dataset.image_index(id);
    if (idx < 0) {
      throw validation_error(std::string("open-set protocol ") + role + " image '" + id +
                             "' not in dataset");
    }
    return idx;
  };

  std::unordered_set<std::int32_t> gallery_subjects;
  std::unordered_set<std::int32_t> gallery_images;
  for (const auto& id : protocol.gallery_images) {
    const std::int32_t idx = resolve(id, "gallery");
    if (!gallery_subjects.insert(dataset.image_ref(idx).subject).second) {
      throw validation_error("open-set protocol has two gallery images for subject '" +
                             dataset.image_subject(idx).subject_id + "'");
    }
    gallery_images.insert(idx);
    r.gallery.push_back(idx);
  }
  if (r.gallery.empty()) throw validation_error("open-set protocol has an empty gallery");

  for (const auto& id : protocol.mated_probes) {
    const std::int32_t idx = resolve(id, "mated probe");
    if (gallery_images.count(idx) != 0) {
      throw validation_error("probe image '" + id + "' is also a gallery image");
    }
    if (gallery_subjects.count(dataset.image_ref(idx).subject) == 0) {
      throw validation_error("mated probe '" + id + "' has no gallery subject");
    }
    r.mated.push_back(idx);
  }
  for (const auto& id : protocol.nonmated_probes) {
    const std::int32_t idx = resolve(id, "nonmated probe");
    if (gallery_subjects.count(dataset.image_ref(idx).subject) != 0) {
      throw validation_error("nonmated probe '" + id + "' belongs to a gallery subject");
    }
    r.nonmated.push_back(idx);
  }
  if (r.mated.empty()) throw validation_error("open-set protocol has no mated probes");
  return r;
}

}  // namespace

OpenSetReport open_set_identify(const ScoreDataset& dataset, std::string_view matcher,
                                const OpenSetProtocol& protocol, int threads) {
  if (!dataset.has_matcher(matcher)) {
    throw validation_error("unknown matcher '" + std::string(matcher) + "'");
  }
  for (int rank : protocol.ranks) {
    if (rank < 1) throw validation_error("rank targets must be >= 1");
  }
  for (double far : protocol.far_targets) {
    if (!(far > 0.0 && far <= 1.0)) throw validation_error("FAR target must be in (0, 1]");
  }
  const ResolvedProtocol resolved = resolve_and_validate(dataset, protocol);

  const bool needs_nonmated =
      std::any_of(protocol.far_targets.begin(), protocol.far_targets.end(),
                  [](double far) { return far < 1.0; });
  if (needs_nonmated && resolved.nonmated.empty()) {
    throw validation_error("open-set FAR target < 1 requires nonmated probes");
  }

  const auto score_of = [&](std::int32_t probe, std::int32_t gallery) {
    const auto s = dataset.score(matcher, probe, gallery);
    if (!s.has_value()) {
      throw validation_error("matcher '" + std::string(matcher) + "' is missing the probe-gallery pair (" +
                             dataset.image_id(probe) + ", " + dataset.image_id(gallery) + ")");
    }
    return *s;
  };

  // Per mated probe: the mate's score and its rank among the gallery.
  struct MatedOutcome {
    double mate_score = 0.0;
    std::size_t rank = 0;
  };
  std::vector<MatedOutcome> mated(resolved.mated.size());
  parallel_for(resolved.mated.size(), threads, [&](std::size_t i) {
    const std::int32_t probe = resolved.mated[i];
    const std::int32_t probe_subject = dataset.image_ref(probe).subject;
    std::vector<double> scores(resolved.gallery.size());
    double mate_score = 0.0;
    std::size_t mate_pos = 0;
    for (std::size_t gi = 0; gi < resolved.gallery.size(); ++gi) {
      scores[gi] = score_of(probe, resolved.gallery[gi]);
      if (dataset.image_ref(resolved.gallery[gi]).subject == probe_subject) {
        mate_score = scores[gi];
        mate_pos = gi;
      }
    }
    std::size_t beaten_by = 0;
    for (std::size_t gi = 0; gi < resolved.gallery.size(); ++gi) {
      if (gi != mate_pos && scores[gi] >= mate_score) ++beaten_by;
    }
    mated[i] = MatedOutcome{mate_score, beaten_by + 1};
  });

  // Per nonmated probe: the maximum gallery score.
  std::vector<double> nonmated_max(resolved.nonmated.size());
  parallel_for(resolved.nonmated.size(), threads, [&](std::size_t i) {
    double best = -std::numeric_limits<double>::infinity();
    for (const std::int32_t g : resolved.gallery) {
      best = std::max(best, score_of(resolved.nonmated[i], g));
    }
    nonmated_max[i] = best;
  });
  std::sort(nonmated_max.begin(), nonmated_max.end());

  OpenSetReport report;
  report.matcher_id = std::string(matcher);
  report.n_gallery = resolved.gallery.size();
  report.n_mated = resolved.mated.size();
  report.n_nonmated = resolved.nonmated.size();

  for (double far : protocol.far_targets) {
    ThresholdPick pick;
    if (far >= 1.0) {
      pick = ThresholdPick{-std::numeric_limits<double>::infinity(), 1.0, false};
    } else {
      pick = threshold_at_rate(nonmated_max, far);
    }
    for (int rank : protocol.ranks) {
      std::size_t hits = 0;
      for (const MatedOutcome& outcome : mated) {
        if (outcome.rank <= static_cast<std::size_t>(rank) && outcome.mate_score >= pick.threshold) {
          ++hits;
        }
      }
      DirCell cell;
      cell.rank = rank;
      cell.far_target = far;
      cell.threshold = pick.threshold;
      cell.achieved_fpir = pick.achieved_rate;
      cell.dir = static_cast<double>(hits) / static_cast<double>(mated.size());
      cell.warning = pick.warning;
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace longmatch
