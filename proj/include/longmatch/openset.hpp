#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longmatch/dataset.hpp"

namespace longmatch {

/// Fully explicit open-set protocol: who is enrolled, who probes, and at
/// which operating points the DIR table is evaluated.
struct OpenSetProtocol {
  std::vector<std::string> gallery_images;   // exactly one per gallery subject
  std::vector<std::string> mated_probes;     // subjects present in the gallery
  std::vector<std::string> nonmated_probes;  // subjects absent from the gallery
  std::vector<int> ranks;
  std::vector<double> far_targets;
};

struct OpenSetProtocolOptions {
  /// Keep only mated probes with round(delta_t since enrollment) == lapse.
  std::optional<int> probe_lapse_years;
  std::vector<int> ranks{1, 3};
  std::vector<double> far_targets{0.01};
};

/// gallery: enrollment image of every subject with >= 2 acquisitions;
/// mated probes: their later acquisitions; nonmated probes: the single
/// image of every 1-acquisition subject.
OpenSetProtocol default_open_set_protocol(const ScoreDataset& dataset,
                                          const OpenSetProtocolOptions& options = {});

struct DirCell {
  int rank = 0;
  double far_target = 0.0;
  double threshold = 0.0;
  double achieved_fpir = 0.0;
  double dir = 0.0;
  bool warning = false;
};

struct OpenSetReport {
  std::string matcher_id;
  std::size_t n_gallery = 0;
  std::size_t n_mated = 0;
  std::size_t n_nonmated = 0;
  std::vector<DirCell> cells;

  static constexpr const char* kFarDefinition =
      "FPIR: fraction of nonmated probes whose maximum gallery score >= threshold";
  static constexpr const char* kRankRule =
      "rank = 1 + count of nonmate gallery scores >= mate score (ties rank against the mate)";
  static constexpr const char* kTieConvention = "accept if score >= threshold";
};

/// DIR(r, far) = fraction of mated probes whose mate ranks <= r and whose
/// mate score >= the threshold calibrated on nonmated max-gallery scores.
/// Requires a score for every (probe, gallery image) pair. threads <= 1 is
/// the serial reference path; results are identical either way.
OpenSetReport open_set_identify(const ScoreDataset& dataset, std::string_view matcher,
                                const OpenSetProtocol& protocol, int threads = 1);

}  // namespace longmatch
