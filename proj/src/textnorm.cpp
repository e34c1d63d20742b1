#include "vcrank/textnorm.hpp"

#include <algorithm>
#include <cstdint>

#include <json.hpp>

#include "vcrank/corpus.hpp"
#include "vcrank/error.hpp"

namespace vcrank::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range values.
    if (ok) {
      static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
      if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) ok = false;
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      out.push_back(kReplacement);
      ++i;
    }
  }
  return out;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

enum class CharClass { space, punct, apostrophe, hyphen, word };

CharClass classify(char32_t c) {
  if (c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200B) ||
      c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF) {
    return CharClass::space;
  }
  if (c == '\'' || c == 0x2019) return CharClass::apostrophe;
  if (c == '-' || c == 0x2010 || c == 0x2011) return CharClass::hyphen;
  if (c < 0x80) {
    if (c < 0x20 || c == 0x7F) return CharClass::space;
    const bool ascii_punct = (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                             (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    return ascii_punct ? CharClass::punct : CharClass::word;
  }
  // Latin-1 punctuation and symbols, keeping the letter-like ones.
  if (c >= 0xA1 && c <= 0xBF) {
    switch (c) {
      case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA: case 0xBC: case 0xBD: case 0xBE:
        return CharClass::word;
      default:
        return CharClass::punct;
    }
  }
  if (c == 0xD7 || c == 0xF7) return CharClass::punct;
  if ((c >= 0x2012 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E)) return CharClass::punct;
  if (c >= 0x3001 && c <= 0x303F) return CharClass::punct;
  if ((c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) ||
      (c >= 0xFF5B && c <= 0xFF65)) {
    return CharClass::punct;
  }
  return CharClass::word;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;  // Greek
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;                // Cyrillic
  return c;
}

std::string gram_key(const Ngram& gram) {
  std::string key;
  for (const auto& t : gram) {
    key += t;
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<CharClass> cls(cps.size());
  std::transform(cps.begin(), cps.end(), cls.begin(), classify);

  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    switch (cls[i]) {
      case CharClass::word:
        encode_utf8(to_lower(cps[i]), cur);
        break;
      case CharClass::apostrophe:
      case CharClass::hyphen: {
        const bool inner = i > 0 && i + 1 < cps.size() && cls[i - 1] == CharClass::word &&
                           cls[i + 1] == CharClass::word;
        if (inner) {
          cur.push_back(cls[i] == CharClass::apostrophe ? '\'' : '-');
        } else {
          flush();
        }
        break;
      }
      case CharClass::space:
      case CharClass::punct:
        flush();
        break;
    }
  }
  flush();
  return out;
}

std::string join(const TokenSeq& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

void NgramCounts::add(Ngram gram, std::size_t times) {
  auto key = gram_key(gram);
  auto it = index_.find(key);
  if (it == index_.end()) {
    index_.emplace(std::move(key), items_.size());
    items_.emplace_back(std::move(gram), times);
  } else {
    items_[it->second].second += times;
  }
  total_ += times;
}

std::size_t NgramCounts::count(const Ngram& gram) const {
  auto it = index_.find(gram_key(gram));
  return it == index_.end() ? 0 : items_[it->second].second;
}

NgramCounts ngrams(const TokenSeq& seq, std::size_t n) {
  if (n == 0) throw ValidationError("n-gram order must be at least 1");
  NgramCounts out;
  if (seq.size() < n) return out;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    out.add(Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i), seq.begin() + static_cast<std::ptrdiff_t>(i + n)));
  }
  return out;
}

bool contains_run(const TokenSeq& haystack, const TokenSeq& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

// ---------------------------------------------------------------------------

GenderLexicon::GenderLexicon(std::set<std::string> man, std::set<std::string> woman,
                             std::set<std::string> person, std::set<std::string> plural)
    : man_(man.begin(), man.end()),
      woman_(woman.begin(), woman.end()),
      person_(person.begin(), person.end()),
      plural_(plural.begin(), plural.end()) {
  auto check_nonempty = [](const auto& s, const char* name) {
    if (s.empty()) throw ValidationError(std::string("gender lexicon: \"") + name + "\" set is empty");
  };
  check_nonempty(man_, "man");
  check_nonempty(woman_, "woman");
  check_nonempty(person_, "person");
  auto check_disjoint = [](const auto& a, const auto& b, const char* na, const char* nb) {
    for (const auto& t : a) {
      if (b.contains(t)) {
        throw ValidationError("gender lexicon: \"" + t + "\" appears in both \"" + na + "\" and \"" + nb + "\"");
      }
    }
  };
  check_disjoint(man_, woman_, "man", "woman");
  check_disjoint(man_, person_, "man", "person");
  check_disjoint(woman_, person_, "woman", "person");
}

namespace {

const std::set<std::string> kDefaultPlural = {"men",   "boys",   "males",  "gentlemen", "guys",
                                              "women", "girls",  "females", "ladies",   "people",
                                              "persons"};

}  // namespace

GenderLexicon default_gender_lexicon() {
  return GenderLexicon({"man", "men", "boy", "boys", "male", "males", "gentleman", "gentlemen", "guy", "guys"},
                       {"woman", "women", "girl", "girls", "female", "females", "lady", "ladies"},
                       {"person", "people", "persons"}, kDefaultPlural);
}

GenderLexicon GenderLexicon::from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("gender lexicon: malformed JSON: ") + e.what());
  }
  auto read_set = [&](const char* field, bool required) {
    std::set<std::string> out;
    auto it = j.find(field);
    if (it == j.end()) {
      if (required) throw ValidationError(std::string("gender lexicon: missing \"") + field + "\"");
      return kDefaultPlural;
    }
    if (!it->is_array()) throw ValidationError(std::string("gender lexicon: \"") + field + "\" must be an array");
    for (const auto& t : *it) {
      if (!t.is_string()) throw ValidationError("gender lexicon: terms must be strings");
      auto toks = tokenize(t.get<std::string>());
      if (toks.size() != 1) {
        throw ValidationError("gender lexicon: term \"" + t.get<std::string>() + "\" is not a single token");
      }
      out.insert(toks.front());
    }
    return out;
  };
  if (!j.is_object()) throw ValidationError("gender lexicon: expected a JSON object");
  return GenderLexicon(read_set("man", true), read_set("woman", true), read_set("person", true),
                       read_set("plural", false));
}

GenderLexicon GenderLexicon::load(const std::string& path) {
  auto in = open_input(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(content);
}

std::optional<Gender> GenderLexicon::classify(std::string_view token) const {
  if (man_.contains(token)) return Gender::man;
  if (woman_.contains(token)) return Gender::woman;
  if (person_.contains(token)) return Gender::person;
  return std::nullopt;
}

bool GenderLexicon::is_plural(std::string_view token) const { return plural_.contains(token); }

}  // namespace vcrank::text
