#include "pdmp/loss.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/errors.hpp"

namespace pdmp {

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      p(i, j) = std::exp(row[j] - mx);
      z += p(i, j);
    }
    for (std::size_t j = 0; j < row.size(); ++j) p(i, j) /= z;
  }
  return p;
}

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + logits.shape_string());
  }
  const auto classes = static_cast<int>(logits.cols());
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  LossAndGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) {
      throw InputError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) +
                       ")");
    }
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = std::log(z);
    out.loss += log_z - (row[static_cast<std::size_t>(y)] - mx);
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double p = std::exp(row[j] - mx - log_z);
      g[j] = (p - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv_batch;
    }
  }
  out.loss *= inv_batch;
  return out;
}

}  // namespace pdmp
