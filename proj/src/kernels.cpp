#include "pdmp/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/errors.hpp"

namespace pdmp {
namespace {

// Below this many multiply-adds the parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check_affine(const Matrix& x, const Matrix& weight, const Matrix& bias) {
  if (x.cols() != weight.cols() || bias.rows() != weight.rows() || bias.cols() != 1) {
    throw DimensionError("affine shape mismatch: x " + x.shape_string() + ", W " +
                         weight.shape_string() + ", b " + bias.shape_string());
  }
}

void check_affine_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out) {
  if (x.cols() != weight.cols() || grad_out.rows() != x.rows() ||
      grad_out.cols() != weight.rows()) {
    throw DimensionError("affine_backward shape mismatch: x " + x.shape_string() + ", W " +
                         weight.shape_string() + ", grad " + grad_out.shape_string());
  }
}

// Accumulates over k in ascending order for every output, like the serial
// reference, but with j innermost so the loop vectorizes across outputs.
// weight_t is W transposed (d_in x M).
inline void affine_row(const Matrix& x, const Matrix& weight_t, const Matrix& bias, Matrix& out,
                       std::size_t i) {
  const auto xi = x.row(i);
  auto oi = out.row(i);
  std::fill(oi.begin(), oi.end(), 0.0);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double xk = xi[k];
    const auto wk = weight_t.row(k);
    for (std::size_t j = 0; j < oi.size(); ++j) oi[j] += wk[j] * xk;
  }
  for (std::size_t j = 0; j < oi.size(); ++j) oi[j] += bias(j, 0);
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

inline void input_grad_row(const Matrix& weight, const Matrix& grad_out, Matrix& dx,
                           std::size_t i) {
  const auto gi = grad_out.row(i);
  auto di = dx.row(i);
  for (std::size_t j = 0; j < weight.rows(); ++j) {
    const double g = gi[j];
    const auto wj = weight.row(j);
    for (std::size_t k = 0; k < di.size(); ++k) di[k] += g * wj[k];
  }
}

inline void weight_grad_row(const Matrix& x, const Matrix& grad_out, Matrix& dw, std::size_t j) {
  auto dj = dw.row(j);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double g = grad_out(i, j);
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < dj.size(); ++k) dj[k] += g * xi[k];
  }
}

Matrix bias_grad(const Matrix& grad_out) {
  Matrix db(grad_out.cols(), 1);
  for (std::size_t i = 0; i < grad_out.rows(); ++i) {
    const auto gi = grad_out.row(i);
    for (std::size_t j = 0; j < gi.size(); ++j) db(j, 0) += gi[j];
  }
  return db;
}

}  // namespace

Matrix affine(const Matrix& x, const Matrix& weight, const Matrix& bias) {
  check_affine(x, weight, bias);
  Matrix out(x.rows(), weight.rows());
  const Matrix weight_t = transpose(weight);
  const auto rows = static_cast<long>(x.rows());
  const bool parallel = x.rows() * weight.rows() * weight.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (long i = 0; i < rows; ++i) affine_row(x, weight_t, bias, out, static_cast<std::size_t>(i));
  return out;
}

AffineGrads affine_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out) {
  check_affine_backward(x, weight, grad_out);
  AffineGrads g{Matrix(x.rows(), x.cols()), Matrix(weight.rows(), weight.cols()),
                bias_grad(grad_out)};
  const bool parallel = x.rows() * weight.rows() * weight.cols() >= kParallelWork;
  const auto rows = static_cast<long>(x.rows());
  const auto outs = static_cast<long>(weight.rows());
#pragma omp parallel if (parallel)
  {
#pragma omp for schedule(static) nowait
    for (long i = 0; i < rows; ++i)
      input_grad_row(weight, grad_out, g.input, static_cast<std::size_t>(i));
#pragma omp for schedule(static)
    for (long j = 0; j < outs; ++j)
      weight_grad_row(x, grad_out, g.weight, static_cast<std::size_t>(j));
  }
  return g;
}

namespace serial {

Matrix affine(const Matrix& x, const Matrix& weight, const Matrix& bias) {
  check_affine(x, weight, bias);
  Matrix out(x.rows(), weight.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < weight.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) acc += weight(j, k) * x(i, k);
      out(i, j) = acc + bias(j, 0);
    }
  }
  return out;
}

AffineGrads affine_backward(const Matrix& x, const Matrix& weight, const Matrix& grad_out) {
  check_affine_backward(x, weight, grad_out);
  AffineGrads g{Matrix(x.rows(), x.cols()), Matrix(weight.rows(), weight.cols()),
                Matrix(weight.rows(), 1)};
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < weight.rows(); ++j)
      for (std::size_t k = 0; k < x.cols(); ++k) g.input(i, k) += grad_out(i, j) * weight(j, k);
  for (std::size_t j = 0; j < weight.rows(); ++j)
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t k = 0; k < x.cols(); ++k) g.weight(j, k) += grad_out(i, j) * x(i, k);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < weight.rows(); ++j) g.bias(j, 0) += grad_out(i, j);
  return g;
}

}  // namespace serial

Matrix relu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& input, const Matrix& upstream) {
  if (!input.same_shape(upstream)) {
    throw DimensionError("relu_backward shape mismatch: input " + input.shape_string() +
                         ", upstream " + upstream.shape_string());
  }
  Matrix out(input.rows(), input.cols());
  const auto in = input.values();
  const auto up = upstream.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = in[i] > 0.0 ? up[i] : 0.0;
  return out;
}

void add_inplace(Matrix& acc, const Matrix& term) {
  if (!acc.same_shape(term)) {
    throw DimensionError("add shape mismatch: " + acc.shape_string() + " vs " +
                         term.shape_string());
  }
  auto a = acc.values();
  const auto t = term.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += t[i];
}

void scale_inplace(Matrix& m, double factor) {
  for (double& v : m.values()) v *= factor;
}

Matrix scaled(const Matrix& m, double factor) {
  Matrix out = m;
  scale_inplace(out, factor);
  return out;
}

Matrix hcat(std::span<const Matrix> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("hcat row mismatch: " + parts.front().shape_string() + " vs " +
                           p.shape_string());
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const auto src = p.row(i);
      for (std::size_t k = 0; k < src.size(); ++k) out(i, offset + k) = src[k];
      offset += p.cols();
    }
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= m.rows()) throw InputError("gather_rows index out of range");
    const auto src = m.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double sum_abs(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += std::abs(v);
  return acc;
}

}  // namespace pdmp
