#pragma once

// Convolutional relatedness head over frozen word embeddings.
//
//   z_i^k   = ReLU(<f_k, w_{i:i+n_k-1}> + b_k)      i = 1 .. L-n_k+1
//   pool_k  = max_i z_i^k
//   p       = sigmoid(sum_k v_k * pool_k + c)
//
// Sequences shorter than a kernel window are padded with zero rows. Training is
// plain mini-batch gradient descent on mean binary cross-entropy.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcrank/corpus.hpp"

namespace vcrank::cnn {

struct CnnConfig {
  std::size_t embed_dim = 0;
  /// One bank of `num_kernels` kernels per window size.
  std::vector<std::size_t> windows = {3};
  std::size_t num_kernels = 100;
  std::uint64_t seed = 42;
  double learning_rate = 0.01;
  std::size_t epochs = 5;
  std::size_t batch_size = 16;

  void validate() const;
};

struct Kernel {
  std::size_t window = 0;
  /// window x dim, row-major.
  std::vector<double> weights;
  double bias = 0.0;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

struct CnnParams {
  std::size_t dim = 0;
  std::vector<Kernel> kernels;
  std::vector<double> out_weights;
  double out_bias = 0.0;

  /// All-zero parameters with the shape implied by `cfg`.
  static CnnParams zeros(const CnnConfig& cfg);
  /// Kernels uniform in +-1/sqrt(n*D), output weights uniform in +-1/sqrt(K),
  /// biases zero. Draws come from std::mt19937_64(cfg.seed).
  static CnnParams initialize(const CnnConfig& cfg);

  std::size_t size() const;
  bool all_finite() const;
  /// Flat view order: per kernel (weights, bias), then out_weights, out_bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  /// this += scale * other (same shape).
  void axpy(double scale, const CnnParams& other);

  friend bool operator==(const CnnParams&, const CnnParams&) = default;
};

/// L x D embedding rows.
class SequenceInput {
 public:
  SequenceInput(std::size_t dim, std::vector<double> rows);

  std::size_t dim() const { return dim_; }
  std::size_t length() const { return rows_.size() / dim_; }
  std::span<const double> row(std::size_t i) const;
  std::span<const double> data() const { return rows_; }

 private:
  std::size_t dim_;
  std::vector<double> rows_;
};

/// Context tokens, one all-zero separator row, then caption tokens. Each token
/// is embedded independently through `emb`.
SequenceInput encode_pair(std::string_view context, std::string_view caption, const EmbeddingLookup& emb);

struct Example {
  SequenceInput input;
  int label = 0;
};

struct ForwardResult {
  double probability = 0.5;
  double logit = 0.0;
  /// One feature map per kernel (length L-n+1 after padding).
  std::vector<std::vector<double>> feature_maps;
  std::vector<double> pooled;
  /// First index attaining each pooled maximum; it receives the gradient.
  std::vector<std::size_t> argmax;
};

ForwardResult forward(const CnnParams& params, const SequenceInput& input);

/// Mean binary cross-entropy with p clamped to [1e-12, 1-1e-12].
double loss(const CnnParams& params, std::span<const Example> batch);

/// Gradient of loss() over `batch`, shaped like `params`.
CnnParams gradient(const CnnParams& params, std::span<const Example> batch);
CnnParams gradient(const CnnParams& params, const Example& example);

/// Largest component-wise relative error |a-f| / max(|a|,|f|,1e-8) between the
/// analytic gradient and central finite differences with step `eps`.
double grad_check(const CnnParams& params, const Example& example, double eps = 1e-5);

double accuracy(const CnnParams& params, std::span<const Example> data);

struct TrainResult {
  CnnParams params;
  double initial_loss = 0.0;
  /// Full-dataset loss after each epoch.
  std::vector<double> epoch_losses;
};

/// Throws ValidationError on bad input and Error if a non-finite value
/// appears during training.
TrainResult train(std::span<const Example> data, const CnnConfig& cfg);

/// Single-line JSON: {"kernels": [[[..D]..n]..K], "biases", "out_weights", "out_bias"}.
/// Each kernel's window is its row count.
void write_params(std::ostream& out, const CnnParams& params);
CnnParams read_params(std::istream& in);
void save_params(const std::string& path, const CnnParams& params);
CnnParams load_params(const std::string& path);

}  // namespace vcrank::cnn
