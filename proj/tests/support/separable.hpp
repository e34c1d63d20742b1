#pragma once

// The 200-sample separable training set: random unit-row sequences, where the
// positives also carry one copy of a fixed marker row.

#include <cstdint>
#include <vector>

#include "support/gen.hpp"
#include "vcrank/relatedness_model.hpp"
#include "vcrank/vecmath.hpp"

namespace vcrank::testgen {

struct SeparableSpec {
  std::size_t dim = 16;
  std::size_t samples = 200;
  std::size_t min_len = 4;
  std::size_t max_len = 10;
  double marker_scale = 20.0;
  std::uint64_t seed = 2024;
};

inline std::vector<cnn::Example> separable_set(const SeparableSpec& spec = {}) {
  Gen g(spec.seed);
  Vector marker = g.vec(spec.dim);
  normalize_in_place(marker);
  for (auto& x : marker) x *= spec.marker_scale;

  std::vector<cnn::Example> out;
  out.reserve(spec.samples);
  for (std::size_t s = 0; s < spec.samples; ++s) {
    const int label = static_cast<int>(s % 2);
    const std::size_t len = g.range(spec.min_len, spec.max_len);
    std::vector<double> rows;
    for (std::size_t r = 0; r < len; ++r) {
      Vector v = g.vec(spec.dim);
      normalize_in_place(v);
      rows.insert(rows.end(), v.begin(), v.end());
    }
    if (label == 1) {
      const std::size_t at = g.index(len);
      std::copy(marker.begin(), marker.end(), rows.begin() + static_cast<std::ptrdiff_t>(at * spec.dim));
    }
    out.push_back({cnn::SequenceInput(spec.dim, std::move(rows)), label});
  }
  return out;
}

}  // namespace vcrank::testgen
