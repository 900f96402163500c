#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "longmatch/dataset.hpp"

namespace longmatch {

// CSV schemas (header row required):
//   acquisitions: subject_id,image_id,age_years,gender
//   scores:       matcher_id,probe_image_id,reference_image_id,score
//   embeddings:   image_id,d,v_0,...,v_{d-1}

ScoreDataset ingest_dataset(std::istream& acquisitions, const std::string& acquisitions_label,
                            std::istream& scores, const std::string& scores_label);
ScoreDataset ingest_dataset_files(const std::filesystem::path& acquisitions,
                                  const std::filesystem::path& scores);

/// Canonical emission: subjects sorted by id with ascending ages, records
/// sorted by (matcher, lo id, hi id). Re-ingesting the output reproduces
/// it byte-identically. `comments` are written first as '#' lines.
void export_dataset(const ScoreDataset& dataset, std::ostream& acquisitions, std::ostream& scores,
                    std::span<const std::string> comments = {});
void export_dataset_files(const ScoreDataset& dataset, const std::filesystem::path& acquisitions,
                          const std::filesystem::path& scores,
                          std::span<const std::string> comments = {});

struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<std::string> image_ids;
  std::vector<double> values;  // image i at [i*dim, (i+1)*dim)

  std::span<const double> vector_of(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
};

EmbeddingTable load_embeddings(std::istream& in, const std::string& label);
EmbeddingTable load_embeddings_file(const std::filesystem::path& path);

/// Cosine-scores every pair under `matcher_id`. Every listed image must
/// have an embedding. threads <= 1 is the serial reference path.
std::vector<ComparisonRecord> score_pairs(const ScoreDataset& dataset, const EmbeddingTable& embeddings,
                                          std::span<const PairRef> pairs, const std::string& matcher_id,
                                          int threads = 1);

/// Writes content to `path` atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace longmatch
