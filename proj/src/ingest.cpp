#include "longmatch/ingest.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "longmatch/csv.hpp"
#include "longmatch/parallel.hpp"

namespace longmatch {

namespace {

void expect_header(CsvReader& reader, const std::vector<std::string>& expected_prefix) {
  std::vector<std::string> fields;
  if (!reader.next(fields)) reader.fail("missing header row");
  if (fields.size() < expected_prefix.size()) reader.fail("header has too few columns");
  for (std::size_t i = 0; i < expected_prefix.size(); ++i) {
    if (fields[i] != expected_prefix[i]) {
      reader.fail("expected header column '" + expected_prefix[i] + "', got '" + fields[i] + "'");
    }
  }
}

}  // namespace

ScoreDataset ingest_dataset(std::istream& acquisitions, const std::string& acquisitions_label,
                            std::istream& scores, const std::string& scores_label) {
  CsvReader acq_reader(acquisitions, acquisitions_label);
  expect_header(acq_reader, {"subject_id", "image_id", "age_years", "gender"});

  std::map<std::string, Subject> subjects;
  std::vector<std::string> fields;
  while (acq_reader.next(fields)) {
    if (fields.size() != 4) acq_reader.fail("expected 4 columns, got " + std::to_string(fields.size()));
    if (fields[0].empty()) acq_reader.fail("empty subject_id");
    if (fields[1].empty()) acq_reader.fail("empty image_id");
    const double age = acq_reader.parse_double(fields[2], "age_years");
    if (!(age >= 0.0)) acq_reader.fail("age_years must be >= 0, got '" + fields[2] + "'");
    std::optional<Gender> gender;
    try {
      gender = parse_gender_token(fields[3]);
    } catch (const validation_error& e) {
      acq_reader.fail(e.what());
    }

    auto [it, inserted] = subjects.try_emplace(fields[0]);
    Subject& subject = it->second;
    if (inserted) {
      subject.subject_id = fields[0];
      subject.gender = gender;
    } else if (subject.gender != gender) {
      acq_reader.fail("subject '" + fields[0] + "' has conflicting gender values");
    }
    subject.acquisitions.push_back(Acquisition{fields[1], age});
  }

  CsvReader score_reader(scores, scores_label);
  expect_header(score_reader, {"matcher_id", "probe_image_id", "reference_image_id", "score"});
  std::vector<ComparisonRecord> records;
  while (score_reader.next(fields)) {
    if (fields.size() != 4) {
      score_reader.fail("expected 4 columns, got " + std::to_string(fields.size()));
    }
    const double score = score_reader.parse_double(fields[3], "score");
    records.push_back(ComparisonRecord{fields[0], fields[1], fields[2], score});
  }

  std::vector<Subject> subject_list;
  subject_list.reserve(subjects.size());
  for (auto& [id, subject] : subjects) subject_list.push_back(std::move(subject));
  return ScoreDataset::build(std::move(subject_list), records);
}

ScoreDataset ingest_dataset_files(const std::filesystem::path& acquisitions,
                                  const std::filesystem::path& scores) {
  std::ifstream acq(acquisitions);
  if (!acq) throw io_error("cannot open acquisitions file '" + acquisitions.string() + "'");
  std::ifstream sc(scores);
  if (!sc) throw io_error("cannot open scores file '" + scores.string() + "'");
  return ingest_dataset(acq, acquisitions.filename().string(), sc, scores.filename().string());
}

void export_dataset(const ScoreDataset& dataset, std::ostream& acquisitions, std::ostream& scores,
                    std::span<const std::string> comments) {
  for (const auto& c : comments) {
    acquisitions << "# " << c << "\n";
    scores << "# " << c << "\n";
  }
  acquisitions << "subject_id,image_id,age_years,gender\n";
  for (const auto& subject : dataset.subjects()) {
    const std::string gender =
        subject.gender.has_value() ? gender_token(*subject.gender) : std::string();
    for (const auto& acq : subject.acquisitions) {
      acquisitions << subject.subject_id << ',' << acq.image_id << ',' << format_double(acq.age_years)
                   << ',' << gender << "\n";
    }
  }

  scores << "matcher_id,probe_image_id,reference_image_id,score\n";
  for (const auto& rec : dataset.canonical_records()) {
    scores << rec.matcher_id << ',' << rec.probe_image_id << ',' << rec.reference_image_id << ','
           << format_double(rec.raw_score) << "\n";
  }
}

void export_dataset_files(const ScoreDataset& dataset, const std::filesystem::path& acquisitions,
                          const std::filesystem::path& scores, std::span<const std::string> comments) {
  std::ostringstream acq, sc;
  export_dataset(dataset, acq, sc, comments);
  write_file_atomic(acquisitions, acq.str());
  write_file_atomic(scores, sc.str());
}

EmbeddingTable load_embeddings(std::istream& in, const std::string& label) {
  CsvReader reader(in, label);
  std::vector<std::string> fields;
  if (!reader.next(fields)) reader.fail("missing header row");
  if (fields.size() < 2 || fields[0] != "image_id" || fields[1] != "d") {
    reader.fail("expected header image_id,d,v_0,...");
  }

  EmbeddingTable table;
  std::unordered_map<std::string, std::size_t> seen;
  while (reader.next(fields)) {
    if (fields.size() < 3) reader.fail("embedding row has too few columns");
    const long d = reader.parse_long(fields[1], "dimension");
    if (d <= 0) reader.fail("dimension must be positive");
    if (fields.size() != static_cast<std::size_t>(d) + 2) {
      reader.fail("expected " + std::to_string(d) + " components, got " +
                  std::to_string(fields.size() - 2));
    }
    if (table.dim == 0) {
      table.dim = static_cast<std::size_t>(d);
    } else if (table.dim != static_cast<std::size_t>(d)) {
      reader.fail("inconsistent embedding dimension (" + std::to_string(d) + " vs " +
                  std::to_string(table.dim) + ")");
    }
    if (!seen.emplace(fields[0], table.image_ids.size()).second) {
      reader.fail("duplicate embedding for image '" + fields[0] + "'");
    }
    table.image_ids.push_back(fields[0]);
    for (std::size_t i = 0; i < table.dim; ++i) {
      table.values.push_back(reader.parse_double(fields[i + 2], "embedding component"));
    }
  }
  return table;
}

EmbeddingTable load_embeddings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open embeddings file '" + path.string() + "'");
  return load_embeddings(in, path.filename().string());
}

std::vector<ComparisonRecord> score_pairs(const ScoreDataset& dataset, const EmbeddingTable& embeddings,
                                          std::span<const PairRef> pairs, const std::string& matcher_id,
                                          int threads) {
  // Map dataset image index -> embedding row.
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(embeddings.image_ids.size());
  for (std::size_t i = 0; i < embeddings.image_ids.size(); ++i) by_id.emplace(embeddings.image_ids[i], i);

  std::vector<std::size_t> row_of(dataset.image_count());
  for (std::size_t i = 0; i < dataset.image_count(); ++i) {
    const auto& id = dataset.image_id(static_cast<std::int32_t>(i));
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw validation_error("no embedding for image '" + id + "'");
    row_of[i] = it->second;
  }

  std::vector<ComparisonRecord> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const PairRef& pair = pairs[i];
    const double score =
        cosine_score(embeddings.vector_of(row_of[static_cast<std::size_t>(pair.probe_image)]),
                     embeddings.vector_of(row_of[static_cast<std::size_t>(pair.reference_image)]));
    out[i] = ComparisonRecord{matcher_id, dataset.image_id(pair.probe_image),
                              dataset.image_id(pair.reference_image), score};
  });
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw io_error("cannot create directory '" + path.parent_path().string() + "'");
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw io_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
}

}  // namespace longmatch
