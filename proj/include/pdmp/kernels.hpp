#pragma once

// Dense kernels used by the encoders and heads.
//
// The functions in `pdmp` are OpenMP-parallel over independent output rows.
// Every output element is still reduced sequentially in a fixed order, so the
// parallel and serial versions agree bit for bit regardless of thread count.
// The `pdmp::serial` versions are plain loops kept as the reference for tests
// and benchmarks.

#include <span>
#include <vector>

#include "pdmp/matrix.hpp"

namespace pdmp {

/// out[i,j] = sum_k W[j,k] * x[i,k] + b[j]. x: B x d_in, W: M x d_in, b: M x 1.
Matrix affine(const Matrix& x, const Matrix& weight, const Matrix& bias);

struct AffineGrads {
  Matrix input;   // B x d_in
  Matrix weight;  // M x d_in
  Matrix bias;    // M x 1
};

/// Backward of `affine` for upstream gradient `grad_out` (B x M).
AffineGrads affine_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out);

Matrix relu(const Matrix& x);
/// Passes `upstream` where `input` > 0; zero elsewhere, including at exactly 0.
Matrix relu_backward(const Matrix& input, const Matrix& upstream);

/// Elementwise helpers. All check shapes and throw DimensionError.
void add_inplace(Matrix& acc, const Matrix& term);
void scale_inplace(Matrix& m, double factor);
Matrix scaled(const Matrix& m, double factor);
/// Horizontal concatenation [a | b | ...]; all parts share a row count.
Matrix hcat(std::span<const Matrix> parts);
/// Rows of `m` selected by `indices`, in order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);
/// Index of the largest entry per row; ties go to the lower index.
std::vector<int> argmax_rows(const Matrix& m);
double sum_abs(const Matrix& m);

namespace serial {

Matrix affine(const Matrix& x, const Matrix& weight, const Matrix& bias);
AffineGrads affine_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out);

}  // namespace serial

}  // namespace pdmp
