#include "vcrank/relatedness_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "vcrank/error.hpp"
#include "vcrank/textnorm.hpp"

namespace vcrank::cnn {

namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Uniform double in [0,1) from the top 53 bits.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double bound) { return (2.0 * unit_draw(rng) - 1.0) * bound; }

double example_loss(double p, int label) {
  const double pc = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return label == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

void check_shape(const CnnParams& a, const CnnParams& b) {
  if (a.dim != b.dim || a.kernels.size() != b.kernels.size() || a.out_weights.size() != b.out_weights.size()) {
    throw ValidationError("parameter shape mismatch");
  }
  for (std::size_t k = 0; k < a.kernels.size(); ++k) {
    if (a.kernels[k].window != b.kernels[k].window) throw ValidationError("parameter shape mismatch");
  }
}

// Window `i` of `input` padded with zero rows past its end.
double window_dot(const Kernel& k, const SequenceInput& input, std::size_t start) {
  const std::size_t dim = input.dim();
  double s = 0.0;
  for (std::size_t r = 0; r < k.window && start + r < input.length(); ++r) {
    const auto row = input.row(start + r);
    const double* w = k.weights.data() + r * dim;
    for (std::size_t c = 0; c < dim; ++c) s += w[c] * row[c];
  }
  return s;
}

}  // namespace

void CnnConfig::validate() const {
  if (embed_dim < 2) throw ValidationError("embed_dim must be at least 2");
  if (windows.empty()) throw ValidationError("at least one window size is required");
  for (auto n : windows) {
    if (n < 1) throw ValidationError("window size must be at least 1");
  }
  if (num_kernels < 1) throw ValidationError("num_kernels must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
}

// ---------------------------------------------------------------------------
// CnnParams

CnnParams CnnParams::zeros(const CnnConfig& cfg) {
  cfg.validate();
  CnnParams p;
  p.dim = cfg.embed_dim;
  for (auto n : cfg.windows) {
    for (std::size_t k = 0; k < cfg.num_kernels; ++k) p.kernels.push_back({n, std::vector<double>(n * p.dim, 0.0), 0.0});
  }
  p.out_weights.assign(p.kernels.size(), 0.0);
  return p;
}

CnnParams CnnParams::initialize(const CnnConfig& cfg) {
  CnnParams p = zeros(cfg);
  std::mt19937_64 rng(cfg.seed);
  for (auto& k : p.kernels) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(k.window * p.dim));
    for (double& w : k.weights) w = uniform(rng, bound);
  }
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(p.kernels.size()));
  for (double& w : p.out_weights) w = uniform(rng, out_bound);
  return p;
}

std::size_t CnnParams::size() const {
  std::size_t n = out_weights.size() + 1;
  for (const auto& k : kernels) n += k.weights.size() + 1;
  return n;
}

bool CnnParams::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  for (const auto& k : kernels) {
    if (!std::all_of(k.weights.begin(), k.weights.end(), finite) || !finite(k.bias)) return false;
  }
  return std::all_of(out_weights.begin(), out_weights.end(), finite) && finite(out_bias);
}

std::vector<double> CnnParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& k : kernels) {
    flat.insert(flat.end(), k.weights.begin(), k.weights.end());
    flat.push_back(k.bias);
  }
  flat.insert(flat.end(), out_weights.begin(), out_weights.end());
  flat.push_back(out_bias);
  return flat;
}

void CnnParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw ValidationError("flat parameter vector has the wrong length");
  std::size_t i = 0;
  for (auto& k : kernels) {
    for (double& w : k.weights) w = flat[i++];
    k.bias = flat[i++];
  }
  for (double& w : out_weights) w = flat[i++];
  out_bias = flat[i];
}

void CnnParams::axpy(double scale, const CnnParams& other) {
  check_shape(*this, other);
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    auto& w = kernels[k].weights;
    const auto& o = other.kernels[k].weights;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += scale * o[j];
    kernels[k].bias += scale * other.kernels[k].bias;
  }
  for (std::size_t k = 0; k < out_weights.size(); ++k) out_weights[k] += scale * other.out_weights[k];
  out_bias += scale * other.out_bias;
}

// ---------------------------------------------------------------------------
// Inputs

SequenceInput::SequenceInput(std::size_t dim, std::vector<double> rows) : dim_(dim), rows_(std::move(rows)) {
  if (dim_ == 0) throw ValidationError("sequence dimension must be positive");
  if (rows_.empty() || rows_.size() % dim_ != 0) {
    throw ValidationError("sequence must hold at least one full row of dimension " + std::to_string(dim_));
  }
}

std::span<const double> SequenceInput::row(std::size_t i) const {
  return std::span<const double>(rows_).subspan(i * dim_, dim_);
}

SequenceInput encode_pair(std::string_view context, std::string_view caption, const EmbeddingLookup& emb) {
  const std::size_t dim = emb.dim();
  std::vector<double> rows;
  auto append = [&](std::string_view text) {
    for (const auto& tok : text::tokenize(text)) {
      const auto v = emb.vector(tok);
      rows.insert(rows.end(), v.begin(), v.end());
    }
  };
  append(context);
  rows.insert(rows.end(), dim, 0.0);
  append(caption);
  return SequenceInput(dim, std::move(rows));
}

// ---------------------------------------------------------------------------
// Forward / loss / gradient

ForwardResult forward(const CnnParams& params, const SequenceInput& input) {
  if (input.dim() != params.dim) {
    throw ValidationError("input dimension " + std::to_string(input.dim()) + " does not match model dimension " +
                          std::to_string(params.dim));
  }
  if (params.out_weights.size() != params.kernels.size()) throw ValidationError("output layer size mismatch");
  ForwardResult r;
  r.feature_maps.resize(params.kernels.size());
  r.pooled.resize(params.kernels.size());
  r.argmax.resize(params.kernels.size());
  double logit = params.out_bias;
  for (std::size_t k = 0; k < params.kernels.size(); ++k) {
    const Kernel& ker = params.kernels[k];
    const std::size_t padded = std::max(input.length(), ker.window);
    auto& fmap = r.feature_maps[k];
    fmap.resize(padded - ker.window + 1);
    std::size_t best = 0;
    for (std::size_t i = 0; i < fmap.size(); ++i) {
      fmap[i] = std::max(0.0, window_dot(ker, input, i) + ker.bias);
      if (fmap[i] > fmap[best]) best = i;
    }
    r.pooled[k] = fmap[best];
    r.argmax[k] = best;
    logit += params.out_weights[k] * r.pooled[k];
  }
  r.logit = logit;
  r.probability = sigmoid(logit);
  return r;
}

double loss(const CnnParams& params, std::span<const Example> batch) {
  if (batch.empty()) throw ValidationError("loss over an empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.label != 0 && ex.label != 1) throw ValidationError("labels must be 0 or 1");
    total += example_loss(forward(params, ex.input).probability, ex.label);
  }
  return total / static_cast<double>(batch.size());
}

CnnParams gradient(const CnnParams& params, std::span<const Example> batch) {
  if (batch.empty()) throw ValidationError("gradient over an empty batch");
  CnnParams g = params;
  for (auto& k : g.kernels) {
    std::fill(k.weights.begin(), k.weights.end(), 0.0);
    k.bias = 0.0;
  }
  std::fill(g.out_weights.begin(), g.out_weights.end(), 0.0);
  g.out_bias = 0.0;

  const double scale = 1.0 / static_cast<double>(batch.size());
  const std::size_t dim = params.dim;
  for (const auto& ex : batch) {
    if (ex.label != 0 && ex.label != 1) throw ValidationError("labels must be 0 or 1");
    const ForwardResult fr = forward(params, ex.input);
    // d(-log p)/dz = p - y while p is inside the clamp; zero once clamped.
    const double p = fr.probability;
    if (p < kProbFloor || p > 1.0 - kProbFloor) continue;
    const double dz = (p - static_cast<double>(ex.label)) * scale;
    g.out_bias += dz;
    for (std::size_t k = 0; k < params.kernels.size(); ++k) {
      g.out_weights[k] += dz * fr.pooled[k];
      // ReLU subgradient is 0 at 0, so only strictly active maxima propagate.
      if (!(fr.pooled[k] > 0.0)) continue;
      const double dpool = dz * params.out_weights[k];
      const Kernel& ker = params.kernels[k];
      auto& gk = g.kernels[k];
      gk.bias += dpool;
      const std::size_t start = fr.argmax[k];
      for (std::size_t r = 0; r < ker.window && start + r < ex.input.length(); ++r) {
        const auto row = ex.input.row(start + r);
        double* gw = gk.weights.data() + r * dim;
        for (std::size_t c = 0; c < dim; ++c) gw[c] += dpool * row[c];
      }
    }
  }
  return g;
}

CnnParams gradient(const CnnParams& params, const Example& example) {
  return gradient(params, std::span<const Example>(&example, 1));
}

double grad_check(const CnnParams& params, const Example& example, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("finite-difference step must be positive");
  const auto analytic = gradient(params, example).flatten();
  const std::span<const Example> one(&example, 1);
  auto flat = params.flatten();
  CnnParams probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double orig = flat[i];
    flat[i] = orig + eps;
    probe.assign(flat);
    const double up = loss(probe, one);
    flat[i] = orig - eps;
    probe.assign(flat);
    const double down = loss(probe, one);
    flat[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, rel);
  }
  return worst;
}

double accuracy(const CnnParams& params, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& ex : data) {
    const int pred = forward(params, ex.input).probability >= 0.5 ? 1 : 0;
    hit += pred == ex.label ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(std::span<const Example> data, const CnnConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ValidationError("training set is empty");
  for (const auto& ex : data) {
    if (ex.input.dim() != cfg.embed_dim) throw ValidationError("training example dimension mismatch");
  }
  TrainResult result;
  result.params = CnnParams::initialize(cfg);
  result.initial_loss = loss(result.params, data);

  std::mt19937_64 rng(cfg.seed ^ 0x5bd1e9955bd1e995ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      result.params.axpy(-cfg.learning_rate, gradient(result.params, batch));
      if (!result.params.all_finite()) {
        throw Error("non-finite parameter after epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                    std::to_string(start) + "; lower the learning rate");
      }
    }
    const double l = loss(result.params, data);
    if (!std::isfinite(l)) throw Error("non-finite loss after epoch " + std::to_string(epoch + 1));
    result.epoch_losses.push_back(l);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

void write_params(std::ostream& out, const CnnParams& params) {
  using nlohmann::json;
  json kernels = json::array();
  json biases = json::array();
  for (const auto& k : params.kernels) {
    json rows = json::array();
    for (std::size_t r = 0; r < k.window; ++r) {
      rows.push_back(std::vector<double>(k.weights.begin() + static_cast<std::ptrdiff_t>(r * params.dim),
                                         k.weights.begin() + static_cast<std::ptrdiff_t>((r + 1) * params.dim)));
    }
    kernels.push_back(std::move(rows));
    biases.push_back(k.bias);
  }
  json j = {{"kernels", std::move(kernels)},
            {"biases", std::move(biases)},
            {"out_weights", params.out_weights},
            {"out_bias", params.out_bias}};
  out << j.dump() << '\n';
  if (!out) throw IoError("write failure while saving parameters");
}

CnnParams read_params(std::istream& in) {
  using nlohmann::json;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("weights: malformed JSON: ") + e.what());
  }
  try {
    CnnParams p;
    const auto& kernels = j.at("kernels");
    const auto& biases = j.at("biases");
    if (!kernels.is_array() || kernels.empty()) throw ValidationError("weights: \"kernels\" must be a nonempty array");
    if (biases.size() != kernels.size()) throw ValidationError("weights: biases/kernels length mismatch");
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      Kernel ker;
      const auto& rows = kernels[k];
      if (!rows.is_array() || rows.empty()) throw ValidationError("weights: each kernel needs at least one row");
      ker.window = rows.size();
      for (const auto& row : rows) {
        auto v = row.get<std::vector<double>>();
        if (p.dim == 0) p.dim = v.size();
        if (v.size() != p.dim || p.dim == 0) throw ValidationError("weights: inconsistent kernel row width");
        ker.weights.insert(ker.weights.end(), v.begin(), v.end());
      }
      ker.bias = biases[k].get<double>();
      p.kernels.push_back(std::move(ker));
    }
    p.out_weights = j.at("out_weights").get<std::vector<double>>();
    p.out_bias = j.at("out_bias").get<double>();
    if (p.out_weights.size() != p.kernels.size()) throw ValidationError("weights: out_weights/kernels length mismatch");
    if (!p.all_finite()) throw ValidationError("weights: non-finite value");
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("weights: schema violation: ") + e.what());
  }
}

void save_params(const std::string& path, const CnnParams& params) {
  auto out = open_output(path);
  write_params(out, params);
}

CnnParams load_params(const std::string& path) {
  auto in = open_input(path);
  return read_params(in);
}

}  // namespace vcrank::cnn
