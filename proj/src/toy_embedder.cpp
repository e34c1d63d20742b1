#include "vcrank/toy_embedder.hpp"

#include <algorithm>

#include "vcrank/error.hpp"
#include "vcrank/textnorm.hpp"

namespace vcrank::toy {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vector embed_token(std::string_view token, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ValidationError("toy embedding dimension must be at least 2");
  const std::uint64_t key = splitmix64(fnv1a64(token) ^ splitmix64(seed));
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const std::uint64_t bits = splitmix64(key + i + 1) >> 11;
    v[i] = 2.0 * (static_cast<double>(bits) * 0x1.0p-53) - 1.0;
  }
  if (!normalize_in_place(v)) {
    // All-zero draw: fall back to a basis vector.
    v.assign(dim, 0.0);
    v[key % dim] = 1.0;
  }
  return v;
}

Vector embed_text(std::string_view text, std::size_t dim, std::uint64_t seed) {
  auto tokens = text::tokenize(text);
  if (tokens.empty()) throw ValidationError("cannot embed text without tokens: \"" + std::string(text) + "\"");
  if (std::all_of(tokens.begin(), tokens.end(), [&](const auto& t) { return t == tokens.front(); })) {
    return embed_token(tokens.front(), dim, seed);
  }
  std::sort(tokens.begin(), tokens.end());
  Vector mean(dim, 0.0);
  for (const auto& t : tokens) {
    const auto v = embed_token(t, dim, seed);
    for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
  }
  if (!normalize_in_place(mean)) {
    throw ValidationError("token vectors of \"" + std::string(text) + "\" cancel out");
  }
  return mean;
}

ToyEmbedder::ToyEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw ValidationError("toy embedding dimension must be at least 2");
}

bool ToyEmbedder::contains(std::string_view key) const { return !text::tokenize(key).empty(); }

Vector ToyEmbedder::vector(std::string_view key) const {
  if (!contains(key)) throw MissingEmbedding(std::string(key));
  return embed_text(key, dim_, seed_);
}

}  // namespace vcrank::toy
