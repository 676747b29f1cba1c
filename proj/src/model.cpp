#include "pdmp/model.hpp"

#include <cmath>

#include "pdmp/errors.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/loss.hpp"

namespace pdmp {
namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double limit, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
  return m;
}

DenseLayer init_layer(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(in));
  return {uniform_matrix(out, in, limit, rng), Matrix(out, 1)};
}

Matrix partition_bias(const HeadParams& head, std::size_t k) {
  return scaled(head.bias, 1.0 / static_cast<double>(k));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix gate_values(const HeadParams& head, std::size_t i, const Matrix& z) {
  Matrix g = affine(z, head.gate_weights[i], head.gate_biases[i]);
  for (double& v : g.values()) v = sigmoid(v);
  return g;
}

void scale_rows(Matrix& m, const Matrix& factors) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double f = factors(r, 0);
    for (double& v : m.row(r)) v *= f;
  }
}

Matrix encode(const EncoderParams& enc, const Matrix& x, EncoderCache* cache) {
  Matrix h = x;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    Matrix pre = affine(h, enc.layers[l].weight, enc.layers[l].bias);
    const bool last = l + 1 == enc.layers.size();
    Matrix next = last ? pre : relu(pre);
    if (cache != nullptr) {
      cache->layer_inputs.push_back(std::move(h));
      cache->pre_activations.push_back(std::move(pre));
    }
    h = std::move(next);
  }
  return h;
}

void encoder_backward(const EncoderParams& enc, const EncoderCache& cache, Matrix upstream,
                      EncoderParams& grads) {
  for (std::size_t l = enc.layers.size(); l-- > 0;) {
    if (l + 1 != enc.layers.size()) upstream = relu_backward(cache.pre_activations[l], upstream);
    AffineGrads g = affine_backward(cache.layer_inputs[l], enc.layers[l].weight, upstream);
    grads.layers[l].weight = std::move(g.weight);
    grads.layers[l].bias = std::move(g.bias);
    upstream = std::move(g.input);
  }
}

void check_batch(const Parameters& params, const Batch& batch) {
  if (batch.inputs.size() != params.num_modalities()) {
    throw DimensionError("batch has " + std::to_string(batch.inputs.size()) +
                         " modalities, model has " + std::to_string(params.num_modalities()));
  }
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    if (batch.inputs[i].cols() != params.encoders[i].input_dim() ||
        batch.inputs[i].rows() != batch.size()) {
      throw DimensionError("modality " + std::to_string(i) + " input " +
                           batch.inputs[i].shape_string() + " does not match encoder input dim " +
                           std::to_string(params.encoders[i].input_dim()) + " and batch size " +
                           std::to_string(batch.size()));
    }
  }
}

}  // namespace

std::string to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::concat: return "concat";
    case FusionKind::summation: return "summation";
    case FusionKind::gated: return "gated";
  }
  return "?";
}

FusionKind parse_fusion(std::string_view name) {
  if (name == "concat") return FusionKind::concat;
  if (name == "summation") return FusionKind::summation;
  if (name == "gated") return FusionKind::gated;
  throw InputError("unknown fusion '" + std::string(name) +
                   "' (expected concat, summation or gated)");
}

void for_each_block(Parameters& p, const std::function<void(const BlockRef&, Matrix&)>& fn) {
  for (std::size_t i = 0; i < p.encoders.size(); ++i) {
    const int m = static_cast<int>(i);
    for (std::size_t l = 0; l < p.encoders[i].layers.size(); ++l) {
      const std::string base = "encoder" + std::to_string(i) + ".layer" + std::to_string(l);
      fn({m, m, base + ".weight"}, p.encoders[i].layers[l].weight);
      fn({m, m, base + ".bias"}, p.encoders[i].layers[l].bias);
    }
  }
  HeadParams& h = p.head;
  for (std::size_t i = 0; i < h.weights.size(); ++i) {
    fn({kHeadOwner, static_cast<int>(i), "head.weight" + std::to_string(i)}, h.weights[i]);
  }
  fn({kHeadOwner, -1, "head.bias"}, h.bias);
  for (std::size_t i = 0; i < h.gate_weights.size(); ++i) {
    fn({kHeadOwner, static_cast<int>(i), "head.gate_weight" + std::to_string(i)},
       h.gate_weights[i]);
  }
  for (std::size_t i = 0; i < h.gate_biases.size(); ++i) {
    fn({kHeadOwner, static_cast<int>(i), "head.gate_bias" + std::to_string(i)}, h.gate_biases[i]);
  }
}

void for_each_block(const Parameters& p,
                    const std::function<void(const BlockRef&, const Matrix&)>& fn) {
  for_each_block(const_cast<Parameters&>(p),
                 [&](const BlockRef& ref, Matrix& m) { fn(ref, static_cast<const Matrix&>(m)); });
}

std::size_t parameter_count(const Parameters& p) {
  std::size_t n = 0;
  for_each_block(p, [&](const BlockRef&, const Matrix& m) { n += m.size(); });
  return n;
}

std::vector<double> flatten(const Parameters& p) {
  std::vector<double> out;
  out.reserve(parameter_count(p));
  for_each_block(p, [&](const BlockRef&, const Matrix& m) {
    out.insert(out.end(), m.values().begin(), m.values().end());
  });
  return out;
}

void unflatten(std::span<const double> values, Parameters& p) {
  if (values.size() != parameter_count(p)) {
    throw DimensionError("unflatten: " + std::to_string(values.size()) + " values for " +
                         std::to_string(parameter_count(p)) + " parameters");
  }
  std::size_t offset = 0;
  for_each_block(p, [&](const BlockRef&, Matrix& m) {
    auto dst = m.values();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  });
}

Parameters zeros_like(const Parameters& p) {
  Parameters out = p;
  for_each_block(out, [](const BlockRef&, Matrix& m) { std::fill(m.values().begin(), m.values().end(), 0.0); });
  return out;
}

bool same_shapes(const Parameters& a, const Parameters& b) {
  std::vector<std::pair<std::size_t, std::size_t>> sa;
  std::vector<std::pair<std::size_t, std::size_t>> sb;
  for_each_block(a, [&](const BlockRef&, const Matrix& m) { sa.emplace_back(m.rows(), m.cols()); });
  for_each_block(b, [&](const BlockRef&, const Matrix& m) { sb.emplace_back(m.rows(), m.cols()); });
  return a.head.fusion == b.head.fusion && sa == sb;
}

bool all_finite(const Parameters& p) {
  bool ok = true;
  for_each_block(p, [&](const BlockRef&, const Matrix& m) { ok = ok && m.all_finite(); });
  return ok;
}

Parameters init_model(const ModelConfig& config, const Rng& rng) {
  if (config.input_dims.empty()) throw InputError("init_model: no modalities");
  if (config.encoder_widths.empty()) throw InputError("init_model: encoder_widths is empty");
  if (config.num_classes < 2) throw InputError("init_model: num_classes must be >= 2");
  Parameters p;
  for (std::size_t i = 0; i < config.input_dims.size(); ++i) {
    Rng enc_rng = rng.derive("encoder", i);
    EncoderParams enc;
    std::size_t in = config.input_dims[i];
    for (std::size_t width : config.encoder_widths) {
      if (width == 0) throw InputError("init_model: zero encoder width");
      enc.layers.push_back(init_layer(in, width, enc_rng));
      in = width;
    }
    p.encoders.push_back(std::move(enc));
  }
  const auto classes = static_cast<std::size_t>(config.num_classes);
  const std::size_t k = config.input_dims.size();
  const std::size_t d = config.encoder_widths.back();
  Rng head_rng = rng.derive("head");
  HeadParams& h = p.head;
  h.fusion = config.fusion;
  h.bias = Matrix(classes, 1);
  switch (config.fusion) {
    case FusionKind::concat: {
      const double limit = 1.0 / std::sqrt(static_cast<double>(d * k));
      for (std::size_t i = 0; i < k; ++i) h.weights.push_back(uniform_matrix(classes, d, limit, head_rng));
      break;
    }
    case FusionKind::summation: {
      const double limit = 1.0 / std::sqrt(static_cast<double>(d));
      for (std::size_t i = 0; i < k; ++i) h.weights.push_back(uniform_matrix(classes, d, limit, head_rng));
      break;
    }
    case FusionKind::gated: {
      const double limit = 1.0 / std::sqrt(static_cast<double>(d));
      for (std::size_t i = 0; i < k; ++i) {
        h.weights.push_back(uniform_matrix(classes, d, limit, head_rng));
        h.gate_weights.push_back(uniform_matrix(1, d, limit, head_rng));
        h.gate_biases.emplace_back(1, 1);
      }
      break;
    }
  }
  return p;
}

Batch make_batch(const Split& split, std::span<const std::size_t> rows) {
  Batch b;
  for (const auto& f : split.features) b.inputs.push_back(gather_rows(f, rows));
  b.labels.reserve(rows.size());
  for (std::size_t r : rows) b.labels.push_back(split.labels[r]);
  return b;
}

Batch whole_split(const Split& split) { return Batch{split.features, split.labels}; }

std::vector<Matrix> decompose_logits(const HeadParams& head, std::span<const Matrix> z) {
  const std::size_t k = z.size();
  if (head.weights.size() != k) {
    throw DimensionError("decompose_logits: " + std::to_string(z.size()) +
                         " representations for a head with " +
                         std::to_string(head.weights.size()) + " weight blocks");
  }
  const Matrix b_i = partition_bias(head, k);
  std::vector<Matrix> s;
  s.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    s.push_back(affine(z[i], head.weights[i], b_i));
    if (head.fusion == FusionKind::gated) scale_rows(s.back(), gate_values(head, i, z[i]));
  }
  return s;
}

ForwardCache forward(const Parameters& params, const Batch& batch) {
  check_batch(params, batch);
  ForwardCache cache;
  const std::size_t k = params.num_modalities();
  cache.encoders.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    cache.representations.push_back(encode(params.encoders[i], batch.inputs[i], &cache.encoders[i]));
  }
  const HeadParams& h = params.head;
  cache.contributions = decompose_logits(h, cache.representations);
  switch (h.fusion) {
    case FusionKind::concat:
      cache.fused = hcat(cache.representations);
      cache.logits = affine(cache.fused, hcat(h.weights), h.bias);
      break;
    case FusionKind::summation: {
      const Matrix no_bias(h.bias.rows(), 1);
      cache.logits = affine(cache.representations.front(), h.weights.front(), no_bias);
      for (std::size_t i = 1; i < k; ++i) {
        add_inplace(cache.logits, affine(cache.representations[i], h.weights[i], no_bias));
      }
      for (std::size_t r = 0; r < cache.logits.rows(); ++r) {
        auto row = cache.logits.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += h.bias(j, 0);
      }
      break;
    }
    case FusionKind::gated:
      for (std::size_t i = 0; i < k; ++i) cache.gates.push_back(gate_values(h, i, cache.representations[i]));
      cache.logits = cache.contributions.front();
      for (std::size_t i = 1; i < k; ++i) add_inplace(cache.logits, cache.contributions[i]);
      break;
  }
  return cache;
}

BackwardResult backward(const Parameters& params, const ForwardCache& cache,
                        std::span<const int> labels) {
  const std::size_t k = params.num_modalities();
  if (cache.representations.size() != k || cache.encoders.size() != k ||
      cache.logits.cols() != params.num_classes()) {
    throw DimensionError("backward: forward cache does not match the parameters");
  }
  LossAndGrad lg = softmax_cross_entropy(cache.logits, labels);
  BackwardResult out{lg.loss, zeros_like(params)};
  const HeadParams& h = params.head;
  HeadParams& gh = out.grads.head;
  const Matrix& d_logits = lg.grad;

  std::vector<Matrix> d_z(k);
  switch (h.fusion) {
    case FusionKind::concat:
    case FusionKind::summation: {
      for (std::size_t i = 0; i < k; ++i) {
        AffineGrads g = affine_backward(cache.representations[i], h.weights[i], d_logits);
        gh.weights[i] = std::move(g.weight);
        d_z[i] = std::move(g.input);
        if (i == 0) gh.bias = std::move(g.bias);
      }
      break;
    }
    case FusionKind::gated: {
      const Matrix b_i = partition_bias(h, k);
      const double inv_k = 1.0 / static_cast<double>(k);
      gh.bias = Matrix(h.bias.rows(), 1);
      for (std::size_t i = 0; i < k; ++i) {
        const Matrix& z = cache.representations[i];
        const Matrix& gate = cache.gates[i];
        const Matrix u = affine(z, h.weights[i], b_i);
        Matrix d_u = d_logits;
        scale_rows(d_u, gate);
        Matrix d_gate_pre(z.rows(), 1);
        for (std::size_t r = 0; r < z.rows(); ++r) {
          double dg = 0.0;
          const auto ur = u.row(r);
          const auto dr = d_logits.row(r);
          for (std::size_t j = 0; j < ur.size(); ++j) dg += dr[j] * ur[j];
          const double g = gate(r, 0);
          d_gate_pre(r, 0) = dg * g * (1.0 - g);
        }
        AffineGrads gu = affine_backward(z, h.weights[i], d_u);
        AffineGrads gg = affine_backward(z, h.gate_weights[i], d_gate_pre);
        gh.weights[i] = std::move(gu.weight);
        scale_inplace(gu.bias, inv_k);
        add_inplace(gh.bias, gu.bias);
        gh.gate_weights[i] = std::move(gg.weight);
        gh.gate_biases[i] = std::move(gg.bias);
        add_inplace(gu.input, gg.input);
        d_z[i] = std::move(gu.input);
      }
      break;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    encoder_backward(params.encoders[i], cache.encoders[i], std::move(d_z[i]), out.grads.encoders[i]);
  }
  return out;
}

double loss(const Parameters& params, const Batch& batch) {
  return softmax_cross_entropy(forward(params, batch).logits, batch.labels).loss;
}

std::vector<int> predict(const Parameters& params, const Split& split) {
  return argmax_rows(forward(params, whole_split(split)).logits);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double branch_accuracy(const Parameters& params, const Split& split, std::size_t modality) {
  if (modality >= params.num_modalities()) {
    throw InputError("branch_accuracy: modality " + std::to_string(modality) + " out of range");
  }
  const ForwardCache cache = forward(params, whole_split(split));
  return accuracy(argmax_rows(cache.contributions[modality]), split.labels);
}

}  // namespace pdmp
