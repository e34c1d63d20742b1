#include "vcrank/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "vcrank/bias.hpp"
#include "vcrank/capmetrics.hpp"
#include "vcrank/corpus.hpp"
#include "vcrank/dataset_builder.hpp"
#include "vcrank/error.hpp"
#include "vcrank/relatedness_model.hpp"
#include "vcrank/reranker.hpp"
#include "vcrank/scorer.hpp"
#include "vcrank/textnorm.hpp"
#include "vcrank/toy_embedder.hpp"
#include "vcrank/vcsearch.hpp"

namespace vcrank::cli {

namespace {

using nlohmann::json;

std::shared_ptr<spdlog::logger> log() {
  static const auto logger = [] {
    auto l = spdlog::get("vcrank");
    if (!l) l = spdlog::stderr_logger_mt("vcrank");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("VCRANK_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return logger;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct Common {
  std::string config;
  std::uint64_t seed = 42;
  int jobs = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file supplying default values for any flag");
  sub->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads (0 = all cores)")->capture_default_str();
}

struct EmbeddingOpts {
  std::string file;
  std::size_t toy_dim = 0;
};

void add_embeddings(CLI::App* sub, EmbeddingOpts& e) {
  auto* file = sub->add_option("--embeddings", e.file, "embeddings.jsonl");
  auto* toy = sub->add_option("--toy-dim", e.toy_dim, "Use the built-in toy embedder with this dimension");
  file->excludes(toy);
  toy->excludes(file);
}

std::unique_ptr<EmbeddingLookup> make_lookup(const EmbeddingOpts& e, std::uint64_t seed, bool required = true) {
  if (!e.file.empty()) {
    auto table = load_embeddings(e.file);
    log()->info("loaded {} embeddings of dimension {} from {}", table.size(), table.dim(), e.file);
    return std::make_unique<EmbeddingTable>(std::move(table));
  }
  if (e.toy_dim > 0) return std::make_unique<toy::ToyEmbedder>(e.toy_dim, seed);
  if (required) throw ValidationError("one of --embeddings or --toy-dim is required");
  return nullptr;
}

struct BuilderOpts {
  dataset::BuilderConfig cfg;
  std::string join = "concatenated";
};

void add_builder(CLI::App* sub, BuilderOpts& b, bool with_thresholds) {
  sub->add_option("--confidence-threshold", b.cfg.confidence_threshold, "Minimum detection confidence")
      ->capture_default_str();
  sub->add_option("--top-k", b.cfg.top_k_contexts, "Detections kept per classifier")->capture_default_str();
  sub->add_option("--dedup-threshold", b.cfg.dedup_threshold, "Cosine at which two labels are duplicates")
      ->capture_default_str();
  sub->add_option("--context-join", b.join, "concatenated | per_object")->capture_default_str();
  if (with_thresholds) {
    sub->add_option("--thresholds", b.cfg.label_thresholds, "Comma-separated label thresholds")
        ->delimiter(',')
        ->capture_default_str();
  }
}

dataset::BuilderConfig finish(BuilderOpts& b) {
  b.cfg.context_join = scoring::parse_context_join(b.join);
  b.cfg.validate();
  return b.cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config file expansion: values become ordinary flags placed before the
// user's own arguments. Flags given on the command line are not injected.

std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

void append_flag(std::vector<std::string>& out, const std::string& key, const json& value) {
  const std::string flag = "--" + key;
  if (value.is_boolean()) {
    if (value.get<bool>()) out.push_back(flag);
    return;
  }
  out.push_back(flag);
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
  } else if (value.is_array()) {
    std::string joined;
    for (const auto& v : value) {
      if (!joined.empty()) joined.push_back(',');
      joined += v.is_string() ? v.get<std::string>() : v.dump();
    }
    out.push_back(joined);
  } else {
    out.push_back(value.dump());
  }
}

std::unordered_set<std::string> given_flags(const std::vector<std::string>& args) {
  std::unordered_set<std::string> out;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) out.insert(a.substr(0, a.find('=')));
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App* sub) {
  const std::string path = find_config_path(args);
  if (path.empty() || sub == nullptr) return args;
  auto in = open_input(path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  if (!cfg.is_object()) throw ValidationError(path + ": config must be a JSON object");

  const auto given = given_flags(args);
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config" || value.is_object() || given.contains("--" + key)) continue;
    // Top-level keys apply to every subcommand that knows them.
    if (sub->get_option_no_throw("--" + key) != nullptr) append_flag(injected, key, value);
  }
  if (auto section = cfg.find(sub->get_name()); section != cfg.end() && section->is_object()) {
    for (const auto& [key, value] : section->items()) {
      if (!given.contains("--" + key)) append_flag(injected, key, value);
    }
  }
  std::vector<std::string> out;
  out.push_back(args.front());
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

void write_json_lines(const std::string& path, const std::vector<json>& rows) {
  auto out = open_output(path);
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) throw IoError("write failure on " + path);
}

std::vector<json> frequency_rows(std::span<const RelatednessRecord> records) {
  std::vector<json> rows;
  for (const auto& [label, count] : dataset::context_frequency(records)) {
    rows.push_back({{"label", label}, {"count", count}});
  }
  return rows;
}

// Records of one threshold only, so counts are not multiplied by the number
// of thresholds.
std::vector<RelatednessRecord> at_threshold(std::span<const RelatednessRecord> records, std::optional<double> th) {
  if (records.empty()) return {};
  double pick = th.value_or(std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                              return a.threshold < b.threshold;
                            })->threshold);
  std::vector<RelatednessRecord> out;
  for (const auto& r : records) {
    if (std::abs(r.threshold - pick) < 1e-12) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct BuildCmd {
  Common common;
  EmbeddingOpts emb;
  BuilderOpts builder;
  std::string corpus, out, overlap_out, stats_out;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("build-dataset", "Build the relatedness dataset from a corpus");
    add_common(sub, common);
    add_embeddings(sub, emb);
    add_builder(sub, builder, true);
    sub->add_option("--corpus", corpus, "corpus.jsonl")->required();
    sub->add_option("--out", out, "Output relatedness.jsonl")->required();
    sub->add_option("--overlap-out", overlap_out, "Optional overlap.jsonl");
    sub->add_option("--stats-out", stats_out, "Optional stats.jsonl (context label frequencies)");
  }

  int run(std::ostream& os) {
    const auto cfg = finish(builder);
    const auto images = load_corpus(corpus);
    const auto lookup = make_lookup(emb, common.seed);
    auto result = dataset::build_relatedness_dataset(images, *lookup, cfg, common.jobs);
    {
      auto f = open_output(out);
      write_relatedness(f, result.records);
    }
    for (const auto& id : result.skipped) log()->info("skipped image {}: no context survived filtering", id);

    std::vector<double> th = cfg.label_thresholds;
    std::sort(th.begin(), th.end());
    th.erase(std::unique(th.begin(), th.end()), th.end());
    os << "images: " << images.size() << ", skipped: " << result.skipped.size() << "\n";
    for (double t : th) {
      std::size_t total = 0, pos = 0;
      for (const auto& r : result.records) {
        if (r.threshold == t) {
          ++total;
          pos += static_cast<std::size_t>(r.label);
        }
      }
      os << "threshold " << t << ": " << total << " records, " << pos << " positive\n";
    }
    if (!overlap_out.empty()) {
      const auto overlap = dataset::build_overlap_dataset(images, cfg);
      auto f = open_output(overlap_out);
      write_relatedness(f, overlap);
      os << "overlap: " << overlap.size() << " records\n";
    }
    if (!stats_out.empty()) write_json_lines(stats_out, frequency_rows(at_threshold(result.records, std::nullopt)));
    return kOk;
  }
};

struct StatsCmd {
  Common common;
  std::string dataset_path, out;
  std::optional<double> threshold;
  std::size_t top = 10;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("stats", "Context label frequencies of a relatedness dataset");
    add_common(sub, common);
    sub->add_option("--dataset", dataset_path, "relatedness.jsonl or overlap.jsonl")->required();
    sub->add_option("--out", out, "Output stats.jsonl")->required();
    sub->add_option("--threshold", threshold, "Count records of this threshold (default: the lowest present)");
    sub->add_option("--top", top, "Rows echoed to stdout")->capture_default_str();
  }

  int run(std::ostream& os) {
    const auto records = load_relatedness(dataset_path);
    const auto rows = frequency_rows(at_threshold(records, threshold));
    write_json_lines(out, rows);
    for (std::size_t i = 0; i < std::min(top, rows.size()); ++i) {
      os << rows[i]["label"].get<std::string>() << "\t" << rows[i]["count"].get<std::size_t>() << "\n";
    }
    return kOk;
  }
};

struct TrainCmd {
  Common common;
  EmbeddingOpts emb;
  std::string dataset_path, out, loss_log;
  std::optional<double> threshold;
  cnn::CnnConfig cfg;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "Train the convolutional relatedness head");
    add_common(sub, common);
    add_embeddings(sub, emb);
    sub->add_option("--dataset", dataset_path, "relatedness.jsonl")->required();
    sub->add_option("--out", out, "Output weights file")->required();
    sub->add_option("--loss-log", loss_log, "Per-epoch loss log (JSONL)");
    sub->add_option("--threshold", threshold, "Label threshold to train on (default: the lowest present)");
    sub->add_option("--windows", cfg.windows, "Comma-separated window sizes")->delimiter(',')->capture_default_str();
    sub->add_option("--kernels", cfg.num_kernels, "Kernels per window")->capture_default_str();
    sub->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
    sub->add_option("--epochs", cfg.epochs, "Epochs")->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
  }

  int run(std::ostream& os) {
    const auto lookup = make_lookup(emb, common.seed);
    const auto records = at_threshold(load_relatedness(dataset_path), threshold);
    if (records.empty()) throw ValidationError("no training records at the selected threshold");
    std::vector<cnn::Example> data;
    data.reserve(records.size());
    for (const auto& r : records) data.push_back({cnn::encode_pair(r.context, r.caption, *lookup), r.label});
    cfg.embed_dim = lookup->dim();
    cfg.seed = common.seed;
    const auto result = cnn::train(data, cfg);
    cnn::save_params(out, result.params);
    if (!loss_log.empty()) {
      std::vector<json> rows;
      rows.push_back({{"epoch", 0}, {"loss", result.initial_loss}});
      for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        rows.push_back({{"epoch", e + 1}, {"loss", result.epoch_losses[e]}});
      }
      write_json_lines(loss_log, rows);
    }
    os << "examples: " << data.size() << ", initial loss: " << result.initial_loss
       << ", final loss: " << (result.epoch_losses.empty() ? result.initial_loss : result.epoch_losses.back())
       << ", accuracy: " << cnn::accuracy(result.params, data) << "\n";
    return kOk;
  }
};

struct RerankCmd {
  Common common;
  EmbeddingOpts emb;
  BuilderOpts builder;
  std::string candidates, corpus, out, scorer = "simprob", weights, lexicon_path;
  bool neutralize = false;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("rerank", "Re-rank beam candidates by visual-context relatedness");
    add_common(sub, common);
    add_embeddings(sub, emb);
    add_builder(sub, builder, false);
    sub->add_option("--candidates", candidates, "candidates.jsonl")->required();
    sub->add_option("--corpus", corpus, "corpus.jsonl with the images' contexts")->required();
    sub->add_option("--out", out, "Output reranked.jsonl")->required();
    sub->add_option("--scorer", scorer, "simprob | cosine | cnn")->capture_default_str();
    sub->add_option("--weights", weights, "Weights file for --scorer cnn");
    sub->add_flag("--neutralize", neutralize, "Score gender-neutral copies of captions and contexts");
    sub->add_option("--lexicon", lexicon_path, "Gender lexicon override (JSON)");
  }

  int run(std::ostream& os) {
    const auto cfg = finish(builder);
    const auto mode = scoring::parse_score_mode(scorer);
    const auto sets = load_candidates(candidates);
    const auto images = load_corpus(corpus);
    const auto lookup = make_lookup(emb, common.seed);
    std::unordered_map<std::string, const ImageRecord*> by_id;
    for (const auto& im : images) by_id.emplace(im.image_id, &im);

    cnn::CnnParams params;
    rerank::ScoreFn fn;
    switch (mode) {
      case scoring::ScoreMode::cosine_clamped: fn = rerank::cosine_scorer(*lookup, cfg.context_join); break;
      case scoring::ScoreMode::simprob: fn = rerank::simprob_scorer(*lookup, cfg.context_join); break;
      case scoring::ScoreMode::cnn_model:
        if (weights.empty()) throw ValidationError("--scorer cnn needs --weights");
        params = cnn::load_params(weights);
        fn = rerank::cnn_scorer(*lookup, params);
        break;
    }
    std::optional<text::GenderLexicon> lexicon;
    if (neutralize) lexicon = lexicon_path.empty() ? text::default_gender_lexicon() : text::GenderLexicon::load(lexicon_path);

    std::unordered_map<std::string, std::vector<Detection>> contexts;
    std::vector<CandidateSet> usable;
    for (const auto& s : sets) {
      auto it = by_id.find(s.image_id);
      if (it == by_id.end()) throw ValidationError("image \"" + s.image_id + "\" is not in the corpus");
      auto ctx = dataset::retained_contexts(*it->second, *lookup, cfg);
      if (ctx.empty()) {
        log()->warn("skipped image {}: no visual context survived filtering", s.image_id);
        continue;
      }
      contexts.emplace(s.image_id, std::move(ctx));
      usable.push_back(s);
    }
    auto contexts_for = [&](const CandidateSet& s) { return contexts.at(s.image_id); };
    const auto ranked = rerank::rerank_all(usable, contexts_for, fn, lexicon ? &*lexicon : nullptr, common.jobs);
    auto f = open_output(out);
    rerank::write_reranked(f, ranked);
    std::size_t changed = 0;
    for (const auto& r : ranked) changed += r.ranking.front().candidate.original_rank != 0 ? 1 : 0;
    os << "sets: " << ranked.size() << ", skipped: " << sets.size() - usable.size() << ", top-1 changed: " << changed
       << "\n";
    return kOk;
  }
};

struct EvalCmd {
  Common common;
  EmbeddingOpts emb;
  std::string reranked, corpus, out;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("eval", "Caption metrics of the top-ranked captions");
    add_common(sub, common);
    add_embeddings(sub, emb);
    sub->add_option("--reranked", reranked, "reranked.jsonl")->required();
    sub->add_option("--corpus", corpus, "corpus.jsonl with the human references")->required();
    sub->add_option("--out", out, "Output metrics.json")->required();
  }

  int run(std::ostream& os) {
    const auto images = load_corpus(corpus);
    std::unordered_map<std::string, const ImageRecord*> by_id;
    for (const auto& im : images) by_id.emplace(im.image_id, &im);
    auto in = open_input(reranked);
    const auto ranked = rerank::read_reranked(in);
    const auto lookup = make_lookup(emb, common.seed, false);

    std::vector<metrics::EvalItem> items;
    for (const auto& [id, texts] : ranked) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("image \"" + id + "\" is not in the corpus");
      metrics::EvalItem item;
      item.candidate = text::tokenize(texts.front());
      if (item.candidate.empty()) throw ValidationError("image \"" + id + "\": top caption has no tokens");
      for (const auto& ref : it->second->human_captions) item.references.push_back(text::tokenize(ref));
      if (lookup) {
        item.candidate_embedding = lookup->vector(texts.front());
        for (const auto& ref : it->second->human_captions) item.reference_embeddings.push_back(lookup->vector(ref));
      }
      items.push_back(std::move(item));
    }
    const auto values = metrics::evaluate(items, common.jobs);
    json j(values);
    auto f = open_output(out);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failure on " + out);
    for (const auto& [k, v] : values) os << k << "\t" << v << "\n";
    return kOk;
  }
};

struct BiasCmd {
  Common common;
  std::string corpus, objects, lexicon_path, unit = "caption", out;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("bias", "Object/gender co-occurrence ratios");
    add_common(sub, common);
    sub->add_option("--corpus", corpus, "corpus.jsonl")->required();
    sub->add_option("--objects", objects, "Comma-separated object labels")->required();
    sub->add_option("--lexicon", lexicon_path, "Gender lexicon override (JSON)");
    sub->add_option("--unit", unit, "caption | image")->capture_default_str();
    sub->add_option("--out", out, "Output bias_report.jsonl");
  }

  int run(std::ostream& os) {
    const auto images = load_corpus(corpus);
    const auto lexicon = lexicon_path.empty() ? text::default_gender_lexicon() : text::GenderLexicon::load(lexicon_path);
    const auto objs = split_list(objects);
    if (objs.empty()) throw ValidationError("--objects is empty");
    const auto rows = bias::bias_report(images, objs, lexicon, bias::parse_count_unit(unit), common.jobs);

    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    std::vector<json> lines;
    os << "object\t+person\t+man\t+woman\tm\tw\tto-m\n";
    for (const auto& r : rows) {
      const auto cells = bias::display_cells(r);
      os << r.counts.object << "\t" << r.counts.with_person << "\t" << r.counts.with_man << "\t"
         << r.counts.with_woman << "\t" << cells[0] << "\t" << cells[1] << "\t" << cells[2] << "\n";
      lines.push_back({{"object", r.counts.object},
                       {"with_person", r.counts.with_person},
                       {"with_man", r.counts.with_man},
                       {"with_woman", r.counts.with_woman},
                       {"man_ratio", opt(r.man_ratio)},
                       {"woman_ratio", opt(r.woman_ratio)},
                       {"to_men", opt(r.to_men)}});
    }
    if (!out.empty()) write_json_lines(out, lines);
    return kOk;
  }
};

struct SearchCmd {
  Common common;
  EmbeddingOpts emb;
  std::string contexts, corpus, out;
  std::size_t k = 10;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("search", "Retrieve captions by visual-context keywords");
    add_common(sub, common);
    add_embeddings(sub, emb);
    sub->add_option("--contexts", contexts, "Comma-separated context labels used as the query")->required();
    sub->add_option("--k", k, "Results to return")->capture_default_str();
    sub->add_option("--corpus", corpus, "Index this corpus's captions (id = image_id#n) instead of every key");
    sub->add_option("--out", out, "Output JSONL (default: stdout)");
  }

  int run(std::ostream& os) {
    const auto lookup = make_lookup(emb, common.seed);
    std::vector<std::pair<std::string, Vector>> entries;
    if (!corpus.empty()) {
      for (const auto& im : load_corpus(corpus)) {
        for (std::size_t i = 0; i < im.human_captions.size(); ++i) {
          entries.emplace_back(im.image_id + "#" + std::to_string(i), lookup->vector(im.human_captions[i]));
        }
      }
    } else if (const auto* table = dynamic_cast<const EmbeddingTable*>(lookup.get())) {
      for (const auto& key : table->keys()) entries.emplace_back(key, table->vector(key));
    } else {
      throw ValidationError("--corpus is required with --toy-dim");
    }
    const auto index = search::build_index(entries);
    const auto labels = split_list(contexts);
    const auto hits = search::search_by_context(index, labels, *lookup, k, common.jobs);

    std::ostringstream buf;
    for (std::size_t r = 0; r < hits.size(); ++r) {
      buf << json{{"rank", r + 1}, {"id", hits[r].id}, {"score", hits[r].score}}.dump() << '\n';
    }
    if (out.empty()) {
      os << buf.str();
    } else {
      auto f = open_output(out);
      f << buf.str();
      if (!f) throw IoError("write failure on " + out);
    }
    return kOk;
  }
};

struct EmbedToyCmd {
  Common common;
  BuilderOpts builder;
  std::size_t dim = 64;
  std::string texts, corpus, candidates, out;
  bool neutralize = false;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("embed-toy", "Write toy embeddings for every text the pipeline will look up");
    add_common(sub, common);
    add_builder(sub, builder, false);
    sub->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
    sub->add_option("--texts", texts, "Plain text file, one text per line");
    sub->add_option("--corpus", corpus, "Include captions, labels and assembled contexts of this corpus");
    sub->add_option("--candidates", candidates, "Include these candidate captions");
    sub->add_flag("--neutralize", neutralize, "Also include gender-neutral variants");
    sub->add_option("--out", out, "Output embeddings.jsonl")->required();
  }

  int run(std::ostream& os) {
    const auto cfg = finish(builder);
    const toy::ToyEmbedder embedder(dim, common.seed);
    const auto lexicon = text::default_gender_lexicon();
    std::vector<std::string> keys;
    std::unordered_set<std::string> seen;
    auto add_one = [&](const std::string& s) {
      if (!text::tokenize(s).empty() && seen.insert(s).second) keys.push_back(s);
    };
    auto add = [&](const std::string& s) {
      add_one(s);
      for (const auto& t : text::tokenize(s)) add_one(t);
      if (neutralize) {
        const auto n = rerank::neutralize_gender(s, lexicon);
        add_one(n);
        for (const auto& t : text::tokenize(n)) add_one(t);
      }
    };
    if (!texts.empty()) {
      auto in = open_input(texts);
      std::string line;
      while (std::getline(in, line)) add(line);
    }
    if (!corpus.empty()) {
      for (const auto& im : load_corpus(corpus)) {
        for (const auto& c : im.human_captions) add(c);
        for (const auto& d : im.detections) add(d.label);
        const auto ctx = dataset::retained_contexts(im, embedder, cfg);
        if (!ctx.empty()) add(scoring::join_labels(ctx));
        if (neutralize && !ctx.empty()) {
          auto neutral = ctx;
          for (auto& d : neutral) d.label = rerank::neutralize_gender(d.label, lexicon);
          add(scoring::join_labels(neutral));
        }
      }
    }
    if (!candidates.empty()) {
      for (const auto& s : load_candidates(candidates)) {
        for (const auto& c : s.candidates) add(c.text);
      }
    }
    EmbeddingTable table(dim);
    for (const auto& k : keys) table.insert(k, embedder.vector(k));
    auto f = open_output(out);
    write_embeddings(f, table);
    os << "embedded " << table.size() << " keys (dim " << dim << ")\n";
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vcrank: visual-context caption relatedness toolkit", "vcrank"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  BuildCmd build;
  StatsCmd stats;
  TrainCmd train;
  RerankCmd rr;
  EvalCmd eval;
  BiasCmd bias_cmd;
  SearchCmd search_cmd;
  EmbedToyCmd embed;
  build.attach(app);
  stats.attach(app);
  train.attach(app);
  rr.attach(app);
  eval.attach(app);
  bias_cmd.attach(app);
  search_cmd.attach(app);
  embed.attach(app);

  try {
    std::vector<std::string> expanded = args;
    if (!args.empty()) expanded = expand_config(args, app.get_subcommand_no_throw(args.front()));
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInvalid;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInvalid;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kInvalid;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  try {
    if (app.got_subcommand("build-dataset")) return build.run(out);
    if (app.got_subcommand("stats")) return stats.run(out);
    if (app.got_subcommand("train")) return train.run(out);
    if (app.got_subcommand("rerank")) return rr.run(out);
    if (app.got_subcommand("eval")) return eval.run(out);
    if (app.got_subcommand("bias")) return bias_cmd.run(out);
    if (app.got_subcommand("search")) return search_cmd.run(out);
    if (app.got_subcommand("embed-toy")) return embed.run(out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
  err << app.help();
  return kInvalid;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace vcrank::cli
