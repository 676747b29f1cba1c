#pragma once

#include <span>

#include "pdmp/matrix.hpp"

namespace pdmp {

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits, B x M
};

/// Mean softmax cross-entropy over the batch, stabilized by subtracting each
/// row's max. grad = (softmax - onehot) / B.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Row-wise softmax probabilities.
Matrix softmax(const Matrix& logits);

}  // namespace pdmp
