#include "vcrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "vcrank/error.hpp"

namespace vcrank {

using nlohmann::json;

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": " + what);
}

// Calls fn(json, line_no) for every non-blank line, translating parse and
// validation errors into line-tagged ValidationErrors.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail_at(line_no, "expected a JSON object");
    try {
      fn(j, line_no);
    } catch (const ValidationError& e) {
      fail_at(line_no, e.what());
    } catch (const json::exception& e) {
      fail_at(line_no, std::string("schema violation: ") + e.what());
    }
  }
  if (in.bad()) throw IoError("read failure after line " + std::to_string(line_no));
}

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ValidationError(std::string("missing field \"") + field + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_string()) throw ValidationError(std::string("field \"") + field + "\" must be a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number()) throw ValidationError(std::string("field \"") + field + "\" must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(std::string("field \"") + field + "\" must be finite");
  return x;
}

const json& require_array(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_array()) throw ValidationError(std::string("field \"") + field + "\" must be an array");
  return v;
}

}  // namespace

DetectorSource DetectorSource::parse(std::string_view name) {
  if (name == "resnet152") return {Kind::resnet152, {}};
  if (name == "clip") return {Kind::clip, {}};
  if (name == "frcnn") return {Kind::frcnn, {}};
  return {Kind::other, std::string(name)};
}

std::string DetectorSource::name() const {
  switch (kind) {
    case Kind::resnet152: return "resnet152";
    case Kind::clip: return "clip";
    case Kind::frcnn: return "frcnn";
    case Kind::other: break;
  }
  return tag;
}

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingTable::insert(std::string key, std::span<const double> values) {
  if (values.size() != dim_) {
    throw ValidationError("mixed dimensions: key \"" + key + "\" has " + std::to_string(values.size()) +
                          " components, expected " + std::to_string(dim_));
  }
  if (index_.contains(key)) throw ValidationError("duplicate embedding key \"" + key + "\"");
  std::vector<double> row(values.begin(), values.end());
  for (double x : row) {
    if (!std::isfinite(x)) throw ValidationError("non-finite component in \"" + key + "\"");
  }
  if (!normalize_in_place(row)) throw ValidationError("zero vector for key \"" + key + "\"");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), row.begin(), row.end());
}

bool EmbeddingTable::contains(std::string_view key) const { return index_.contains(std::string(key)); }

std::span<const double> EmbeddingTable::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * dim_, dim_);
}

std::span<const double> EmbeddingTable::row(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) throw MissingEmbedding(std::string(key));
  return row(it->second);
}

Vector EmbeddingTable::vector(std::string_view key) const {
  auto r = row(key);
  return Vector(r.begin(), r.end());
}

// ---------------------------------------------------------------------------
// Validation

void validate(const ImageRecord& record) {
  if (record.image_id.empty()) throw ValidationError("empty image_id");
  if (record.human_captions.empty()) throw ValidationError("image \"" + record.image_id + "\" has no captions");
  for (const auto& c : record.human_captions) {
    if (trim(c).empty()) throw ValidationError("image \"" + record.image_id + "\" has an empty caption");
  }
  for (const auto& d : record.detections) {
    if (trim(d.label).empty()) throw ValidationError("image \"" + record.image_id + "\" has an empty context label");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw ValidationError("confidence " + std::to_string(d.confidence) + " of \"" + d.label +
                            "\" is outside [0,1]");
    }
  }
}

void validate(const CandidateSet& set) {
  if (set.candidates.empty()) throw ValidationError("candidate set \"" + set.image_id + "\" is empty");
  std::vector<bool> seen(set.candidates.size(), false);
  for (const auto& c : set.candidates) {
    if (c.original_rank >= seen.size()) {
      throw ValidationError("rank " + std::to_string(c.original_rank) + " out of range in \"" + set.image_id + "\"");
    }
    if (seen[c.original_rank]) {
      throw ValidationError("duplicate original_rank " + std::to_string(c.original_rank) + " in \"" +
                            set.image_id + "\"");
    }
    seen[c.original_rank] = true;
    if (!std::isfinite(c.baseline_score)) throw ValidationError("non-finite baseline score");
  }
}

// ---------------------------------------------------------------------------
// Readers

std::vector<ImageRecord> read_corpus(std::istream& in) {
  std::vector<ImageRecord> out;
  std::unordered_set<std::string> ids;
  for_each_json_line(in, [&](const json& j, std::size_t) {
    ImageRecord r;
    r.image_id = require_string(j, "image_id");
    for (const auto& c : require_array(j, "captions")) {
      if (!c.is_string()) throw ValidationError("captions must be strings");
      r.human_captions.push_back(c.get<std::string>());
    }
    auto ctx = j.find("contexts");
    if (ctx != j.end()) {
      if (!ctx->is_array()) throw ValidationError("field \"contexts\" must be an array");
      for (const auto& d : *ctx) {
        if (!d.is_object()) throw ValidationError("context entries must be objects");
        Detection det;
        det.label = std::string(trim(require_string(d, "label")));
        det.confidence = require_number(d, "confidence");
        det.source = DetectorSource::parse(d.contains("source") ? require_string(d, "source") : "other");
        r.detections.push_back(std::move(det));
      }
    }
    validate(r);
    if (!ids.insert(r.image_id).second) throw ValidationError("duplicate image_id \"" + r.image_id + "\"");
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<CandidateSet> read_candidates(std::istream& in) {
  std::vector<CandidateSet> out;
  for_each_json_line(in, [&](const json& j, std::size_t) {
    CandidateSet s;
    s.image_id = require_string(j, "image_id");
    std::size_t pos = 0;
    for (const auto& c : require_array(j, "candidates")) {
      if (!c.is_object()) throw ValidationError("candidate entries must be objects");
      CandidateCaption cc;
      cc.text = require_string(c, "text");
      cc.baseline_score = require_number(c, "score");
      cc.original_rank = pos;
      // An explicit rank overrides array position.
      if (auto r = c.find("rank"); r != c.end()) {
        if (!r->is_number_integer() || r->get<long long>() < 0) {
          throw ValidationError("field \"rank\" must be a nonnegative integer");
        }
        cc.original_rank = r->get<std::size_t>();
      }
      s.candidates.push_back(std::move(cc));
      ++pos;
    }
    validate(s);
    out.push_back(std::move(s));
  });
  return out;
}

EmbeddingTable read_embeddings(std::istream& in, std::optional<std::size_t> expected_dim) {
  std::optional<EmbeddingTable> table;
  if (expected_dim) table.emplace(*expected_dim);
  for_each_json_line(in, [&](const json& j, std::size_t) {
    std::string key = require_string(j, "key");
    const json& arr = require_array(j, "vector");
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
      if (!x.is_number()) throw ValidationError("vector components must be numbers");
      v.push_back(x.get<double>());
    }
    if (!table) {
      if (v.empty()) throw ValidationError("empty vector for key \"" + key + "\"");
      table.emplace(v.size());
    }
    table->insert(std::move(key), v);
  });
  if (!table) {
    // Empty file: no dimension to infer.
    return EmbeddingTable(1);
  }
  return std::move(*table);
}

std::vector<RelatednessRecord> read_relatedness(std::istream& in) {
  std::vector<RelatednessRecord> out;
  for_each_json_line(in, [&](const json& j, std::size_t) {
    RelatednessRecord r;
    r.caption = require_string(j, "caption");
    r.context = require_string(j, "context");
    r.cosine = require_number(j, "cosine");
    const json& label = require(j, "label");
    if (!label.is_number_integer()) throw ValidationError("field \"label\" must be an integer");
    r.label = label.get<int>();
    if (r.label != 0 && r.label != 1) throw ValidationError("label must be 0 or 1");
    r.threshold = require_number(j, "threshold");
    out.push_back(std::move(r));
  });
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\" for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  return out;
}

namespace {

template <typename Reader>
auto load_with(const std::string& path, Reader&& reader) {
  auto in = open_input(path);
  try {
    return reader(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void check_written(std::ostream& out) {
  if (!out) throw IoError("write failure");
}

}  // namespace

std::vector<ImageRecord> load_corpus(const std::string& path) {
  return load_with(path, [](std::istream& in) { return read_corpus(in); });
}

std::vector<CandidateSet> load_candidates(const std::string& path) {
  return load_with(path, [](std::istream& in) { return read_candidates(in); });
}

EmbeddingTable load_embeddings(const std::string& path, std::optional<std::size_t> expected_dim) {
  return load_with(path, [&](std::istream& in) { return read_embeddings(in, expected_dim); });
}

std::vector<RelatednessRecord> load_relatedness(const std::string& path) {
  return load_with(path, [](std::istream& in) { return read_relatedness(in); });
}

// ---------------------------------------------------------------------------
// Writers

void write_corpus(std::ostream& out, std::span<const ImageRecord> corpus) {
  for (const auto& r : corpus) {
    json ctx = json::array();
    for (const auto& d : r.detections) {
      ctx.push_back({{"label", d.label}, {"confidence", d.confidence}, {"source", d.source.name()}});
    }
    json j = {{"image_id", r.image_id}, {"captions", r.human_captions}, {"contexts", std::move(ctx)}};
    out << j.dump() << '\n';
  }
  check_written(out);
}

void write_candidates(std::ostream& out, std::span<const CandidateSet> sets) {
  for (const auto& s : sets) {
    std::vector<const CandidateCaption*> by_rank(s.candidates.size());
    for (const auto& c : s.candidates) by_rank.at(c.original_rank) = &c;
    json cands = json::array();
    for (const auto* c : by_rank) cands.push_back({{"text", c->text}, {"score", c->baseline_score}});
    out << json{{"image_id", s.image_id}, {"candidates", std::move(cands)}}.dump() << '\n';
  }
  check_written(out);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto r = table.row(i);
    out << json{{"key", table.keys()[i]}, {"vector", std::vector<double>(r.begin(), r.end())}}.dump() << '\n';
  }
  check_written(out);
}

void write_relatedness(std::ostream& out, std::span<const RelatednessRecord> records) {
  for (const auto& r : records) {
    json j = {{"caption", r.caption},
              {"context", r.context},
              {"cosine", r.cosine},
              {"label", r.label},
              {"threshold", r.threshold}};
    out << j.dump() << '\n';
  }
  check_written(out);
}

}  // namespace vcrank
