#pragma once

// Data model and JSONL I/O for every file the pipeline reads or writes.
//
//   corpus.jsonl      {"image_id", "captions": [...], "contexts": [{"label", "confidence", "source"}]}
//   candidates.jsonl  {"image_id", "candidates": [{"text", "score"}]}   rank = array position
//   embeddings.jsonl  {"key", "vector": [...]}
//   relatedness.jsonl {"caption", "context", "cosine", "label", "threshold"}

#include <cstddef>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vcrank/vecmath.hpp"

namespace vcrank {

/// Classifier that produced a detection. Unknown names are kept verbatim as
/// `other` with the original string in `tag`.
struct DetectorSource {
  enum class Kind { resnet152, clip, frcnn, other };
  Kind kind = Kind::other;
  std::string tag;

  static DetectorSource parse(std::string_view name);
  std::string name() const;

  friend bool operator==(const DetectorSource&, const DetectorSource&) = default;
};

struct Detection {
  std::string label;
  double confidence = 0.0;
  DetectorSource source;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ImageRecord {
  std::string image_id;
  std::vector<std::string> human_captions;
  std::vector<Detection> detections;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct CandidateCaption {
  std::string text;
  double baseline_score = 0.0;
  std::size_t original_rank = 0;

  friend bool operator==(const CandidateCaption&, const CandidateCaption&) = default;
};

struct CandidateSet {
  std::string image_id;
  std::vector<CandidateCaption> candidates;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

struct RelatednessRecord {
  std::string caption;
  std::string context;
  double cosine = 0.0;
  int label = 0;
  double threshold = 0.0;

  friend bool operator==(const RelatednessRecord&, const RelatednessRecord&) = default;
};

/// Read-only text -> unit vector source. Implementations must be safe for
/// concurrent calls.
class EmbeddingLookup {
 public:
  virtual ~EmbeddingLookup() = default;
  virtual std::size_t dim() const = 0;
  virtual bool contains(std::string_view key) const = 0;
  /// Unit vector for `key`; throws MissingEmbedding.
  virtual Vector vector(std::string_view key) const = 0;
};

/// Embeddings loaded from a file. Every row is unit-normalized on insert and
/// keys keep their insertion order.
class EmbeddingTable final : public EmbeddingLookup {
 public:
  explicit EmbeddingTable(std::size_t dim);

  /// Normalizes and stores `values`. Throws ValidationError on a duplicate
  /// key, a dimension mismatch or a zero vector.
  void insert(std::string key, std::span<const double> values);

  std::size_t dim() const override { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool contains(std::string_view key) const override;
  Vector vector(std::string_view key) const override;
  std::span<const double> row(std::string_view key) const;
  std::span<const double> row(std::size_t i) const;
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

// Stream readers report the 1-based line number in every ValidationError.
std::vector<ImageRecord> read_corpus(std::istream& in);
std::vector<CandidateSet> read_candidates(std::istream& in);
EmbeddingTable read_embeddings(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt);
std::vector<RelatednessRecord> read_relatedness(std::istream& in);

std::vector<ImageRecord> load_corpus(const std::string& path);
std::vector<CandidateSet> load_candidates(const std::string& path);
EmbeddingTable load_embeddings(const std::string& path, std::optional<std::size_t> expected_dim = std::nullopt);
std::vector<RelatednessRecord> load_relatedness(const std::string& path);

void write_corpus(std::ostream& out, std::span<const ImageRecord> corpus);
void write_candidates(std::ostream& out, std::span<const CandidateSet> sets);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void write_relatedness(std::ostream& out, std::span<const RelatednessRecord> records);

/// Checks the record-level invariants; throws ValidationError.
void validate(const ImageRecord& record);
void validate(const CandidateSet& set);

/// Opens `path` for reading/writing or throws IoError.
std::ifstream open_input(const std::string& path);
std::ofstream open_output(const std::string& path);

}  // namespace vcrank
