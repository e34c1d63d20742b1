#pragma once

// Model-free embeddings for tests and offline pipeline runs.
//
// Token vector construction (reproducible in any language):
//   h    = FNV-1a 64-bit over the token's UTF-8 bytes
//   key  = splitmix64(h ^ splitmix64(seed))
//   x[i] = 2 * (splitmix64(key + i + 1) >> 11) * 2^-53 - 1      for i in [0, dim)
//   v    = x / ||x||
// Text vectors are the normalized mean of their token vectors, so word order
// does not matter.

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "vcrank/corpus.hpp"

namespace vcrank::toy {

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

/// Throws ValidationError when dim < 2.
Vector embed_token(std::string_view token, std::size_t dim, std::uint64_t seed);

/// Throws ValidationError when `text` has no tokens.
Vector embed_text(std::string_view text, std::size_t dim, std::uint64_t seed);

/// Computes embed_text on demand for any key.
class ToyEmbedder final : public EmbeddingLookup {
 public:
  ToyEmbedder(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const override { return dim_; }
  bool contains(std::string_view key) const override;
  Vector vector(std::string_view key) const override;
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

}  // namespace vcrank::toy
