#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdmp/datagen.hpp"
#include "pdmp/matrix.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

enum class FusionKind { concat, summation, gated };

std::string to_string(FusionKind kind);
FusionKind parse_fusion(std::string_view name);

struct DenseLayer {
  Matrix weight;  // out x in
  Matrix bias;    // out x 1
};

/// Affine layers with relu between them (none after the last). The last
/// layer's output is the modality representation z_i.
struct EncoderParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.back().weight.rows(); }
};

/// Linear classifier head.
///
/// concat:    f = W [z_1; ...; z_K] + b, weights[i] is the W_i column block.
/// summation: f = sum_i (W_i z_i) + b, one M-way head per modality, added at
///            the logit level. Requires equal d_i.
/// gated:     f = sum_i g_i (W_i z_i + b / K), g_i = sigmoid(a_i . z_i + c_i).
///
/// b is learned as one vector; the per-modality partition is b_i = b / K.
struct HeadParams {
  FusionKind fusion = FusionKind::concat;
  std::vector<Matrix> weights;
  Matrix bias;                       // M x 1
  std::vector<Matrix> gate_weights;  // gated only: a_i, 1 x d_i
  std::vector<Matrix> gate_biases;   // gated only: c_i, 1 x 1
};

/// Model parameters. The same type carries gradients (GradientSet), so the
/// two mirror each other block for block.
struct Parameters {
  std::vector<EncoderParams> encoders;
  HeadParams head;

  std::size_t num_modalities() const noexcept { return encoders.size(); }
  std::size_t num_classes() const noexcept { return head.bias.rows(); }
};

using ModelState = Parameters;
using GradientSet = Parameters;

/// Owner of a parameter block: an encoder index, or the head (-1).
inline constexpr int kHeadOwner = -1;

/// Visit every block in a fixed order: encoders in modality order (layer
/// weight then bias), then head weights, bias, gate weights, gate biases.
/// `modality` is the block's modality for head partitions, -1 for shared ones.
struct BlockRef {
  int owner;
  int modality;
  std::string name;
};
void for_each_block(Parameters& p, const std::function<void(const BlockRef&, Matrix&)>& fn);
void for_each_block(const Parameters& p,
                    const std::function<void(const BlockRef&, const Matrix&)>& fn);

std::size_t parameter_count(const Parameters& p);
std::vector<double> flatten(const Parameters& p);
void unflatten(std::span<const double> values, Parameters& p);
Parameters zeros_like(const Parameters& p);
bool same_shapes(const Parameters& a, const Parameters& b);
bool all_finite(const Parameters& p);

struct ModelConfig {
  std::vector<std::size_t> input_dims;
  /// Hidden widths followed by the representation size d_i.
  std::vector<std::size_t> encoder_widths = {64, 64, 32};
  int num_classes = 2;
  FusionKind fusion = FusionKind::concat;
};

/// Fan-in scaled uniform init: entries ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// biases zero. Encoder i draws from rng.derive("encoder", i), the head from
/// rng.derive("head").
Parameters init_model(const ModelConfig& config, const Rng& rng);

struct Batch {
  std::vector<Matrix> inputs;  // one B x dim_i per modality
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

Batch make_batch(const Split& split, std::span<const std::size_t> rows);
Batch whole_split(const Split& split);

struct EncoderCache {
  std::vector<Matrix> layer_inputs;  // input to each layer (x, relu(h1), ...)
  std::vector<Matrix> pre_activations;
};

struct ForwardCache {
  std::vector<EncoderCache> encoders;
  std::vector<Matrix> representations;  // z_i, B x d_i
  std::vector<Matrix> contributions;    // s_i, B x M
  std::vector<Matrix> gates;            // gated only: g_i, B x 1
  Matrix fused;                         // z_f, concat only
  Matrix logits;                        // f(x), B x M
};

/// Runs the encoders and head. Logits are computed from the fused
/// representation directly; contributions come from decompose_logits.
ForwardCache forward(const Parameters& params, const Batch& batch);

/// s_i = W_i z_i + b / K (gated: scaled by g_i); sum_i s_i equals the logits.
std::vector<Matrix> decompose_logits(const HeadParams& head, std::span<const Matrix> z);

struct BackwardResult {
  double loss = 0.0;
  GradientSet grads;
};

/// Exact gradients of mean cross-entropy with respect to every parameter.
BackwardResult backward(const Parameters& params, const ForwardCache& cache,
                        std::span<const int> labels);

/// Mean cross-entropy only.
double loss(const Parameters& params, const Batch& batch);

/// Fused predictions for a whole split.
std::vector<int> predict(const Parameters& params, const Split& split);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Accuracy of argmax s_i alone.
double branch_accuracy(const Parameters& params, const Split& split, std::size_t modality);

}  // namespace pdmp
