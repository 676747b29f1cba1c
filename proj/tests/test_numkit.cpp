#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "pdmp/errors.hpp"
#include "pdmp/finite_diff.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/loss.hpp"
#include "pdmp/matrix.hpp"
#include "pdmp/rng.hpp"

using namespace pdmp;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-2.0, 2.0);
  return m;
}

// Triple loop with k ascending, the order the kernels promise.
Matrix naive_affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix out(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) acc += w(j, k) * x(i, k);
      out(i, j) = acc + b(j, 0);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6);
  CHECK(m.row(1)[0] == 4);
  CHECK(m.shape_string() == "2x3");
  CHECK(Matrix::column({1, 2}).cols() == 1);
  CHECK(m.all_finite());
  m(0, 0) = std::nan("");
  CHECK_FALSE(m.all_finite());
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>(3)), DimensionError);
  CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST_CASE("mt19937_64 engine matches the standard's reference value") {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("splitmix64 and fnv1a64 reference vectors") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng determinism over 1000 draws") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform(), y = b.uniform();
    REQUIRE(std::memcmp(&x, &y, sizeof x) == 0);
  }
  Rng c(42), d(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("derived streams depend only on seed and tag") {
  Rng parent(7);
  const auto before = parent.derive("init").seed();
  for (int i = 0; i < 10; ++i) parent.next_u64();
  CHECK(parent.derive("init").seed() == before);
  CHECK(parent.derive("init").seed() != parent.derive("shuffle").seed());
  CHECK(parent.derive("shuffle", 1).seed() != parent.derive("shuffle", 2).seed());
  CHECK(Rng(8).derive("init").seed() != before);
}

TEST_CASE("rng distributions") {
  Rng rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);

  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(11);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 50);
  CHECK_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST_CASE("affine examples") {
  CHECK(affine(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{1, 0}, {0, 1}}), Matrix::column({0, 0})) ==
        Matrix::from_rows({{1, 2}}));
  CHECK(affine(Matrix::from_rows({{1, 1}}), Matrix::from_rows({{2, 3}}), Matrix::column({1})) ==
        Matrix::from_rows({{6}}));
}

TEST_CASE("affine shape errors name both shapes") {
  try {
    affine(Matrix(2, 3), Matrix(4, 2), Matrix(4, 1));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x2") != std::string::npos);
  }
  CHECK_THROWS_AS(affine(Matrix(2, 3), Matrix(4, 3), Matrix(3, 1)), DimensionError);
}

TEST_CASE("affine is bitwise equal to the naive triple loop") {
  Rng rng(1);
  for (auto [b, din, m] : std::vector<std::array<std::size_t, 3>>{{3, 4, 5}, {1, 1, 1}, {17, 33, 9}, {600, 64, 64}}) {
    const Matrix x = random_matrix(b, din, rng);
    const Matrix w = random_matrix(m, din, rng);
    const Matrix bias = random_matrix(m, 1, rng);
    const Matrix want = naive_affine(x, w, bias);
    CHECK(affine(x, w, bias) == want);
    CHECK(serial::affine(x, w, bias) == want);
  }
}

TEST_CASE("affine_backward matches the serial reference and a naive recomputation") {
  Rng rng(2);
  const Matrix x = random_matrix(700, 48, rng);
  const Matrix w = random_matrix(40, 48, rng);
  const Matrix g = random_matrix(700, 40, rng);
  const AffineGrads par = affine_backward(x, w, g);
  const AffineGrads ser = serial::affine_backward(x, w, g);
  CHECK(par.input == ser.input);
  CHECK(par.weight == ser.weight);
  CHECK(par.bias == ser.bias);

  double max_err = 0.0;
  for (std::size_t j = 0; j < w.rows(); ++j) {
    double db = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) db += g(i, j);
    max_err = std::max(max_err, std::abs(db - par.bias(j, 0)));
    for (std::size_t k = 0; k < w.cols(); ++k) {
      double dw = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) dw += g(i, j) * x(i, k);
      max_err = std::max(max_err, std::abs(dw - par.weight(j, k)));
    }
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      double dx = 0.0;
      for (std::size_t j = 0; j < w.rows(); ++j) dx += g(i, j) * w(j, k);
      max_err = std::max(max_err, std::abs(dx - par.input(i, k)));
    }
  }
  CHECK(max_err < 1e-10);
}

TEST_CASE("relu and its backward") {
  CHECK(relu(Matrix::from_rows({{-1, 0, 2}})) == Matrix::from_rows({{0, 0, 2}}));
  CHECK(relu(Matrix::from_rows({{-1, -3}, {-0.5, -2}})) == Matrix(2, 2));
  CHECK(relu_backward(Matrix::from_rows({{-1, 2}}), Matrix::from_rows({{5, 5}})) ==
        Matrix::from_rows({{0, 5}}));
  CHECK(relu_backward(Matrix::from_rows({{0.0}}), Matrix::from_rows({{3.0}})) == Matrix(1, 1));
  CHECK_THROWS_AS(relu_backward(Matrix(1, 2), Matrix(2, 1)), DimensionError);
}

TEST_CASE("elementwise helpers") {
  Matrix a = Matrix::from_rows({{1, -2}});
  add_inplace(a, Matrix::from_rows({{1, 1}}));
  CHECK(a == Matrix::from_rows({{2, -1}}));
  scale_inplace(a, 2.0);
  CHECK(a == Matrix::from_rows({{4, -2}}));
  CHECK(sum_abs(a) == 6.0);
  const Matrix parts[] = {Matrix::from_rows({{1}, {2}}), Matrix::from_rows({{3, 4}, {5, 6}})};
  CHECK(hcat(parts) == Matrix::from_rows({{1, 3, 4}, {2, 5, 6}}));
  const std::size_t idx[] = {1, 1, 0};
  CHECK(gather_rows(parts[1], idx) == Matrix::from_rows({{5, 6}, {5, 6}, {3, 4}}));
  CHECK(argmax_rows(Matrix::from_rows({{1, 3, 3}, {2, 2, 1}})) == std::vector<int>{1, 0});
  CHECK_THROWS_AS(add_inplace(a, Matrix(2, 2)), DimensionError);
}

TEST_CASE("softmax cross-entropy examples") {
  const std::vector<int> labels = {0, 3};
  const LossAndGrad u = softmax_cross_entropy(Matrix(2, 6), labels);
  CHECK(u.loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  CHECK(std::abs(u.loss - 1.7918) < 1e-4);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (double g : u.grad.row(r)) s += g;
    CHECK(std::abs(s) < 1e-15);
  }
  Matrix big(1, 4);
  big(0, 2) = 1000.0;
  const std::vector<int> two = {2};
  const LossAndGrad b = softmax_cross_entropy(big, two);
  CHECK(b.loss >= 0.0);
  CHECK(b.loss < 1e-12);
  CHECK(b.grad.all_finite());
  const std::vector<int> bad = {4};
  CHECK_THROWS_AS(softmax_cross_entropy(Matrix(1, 4), bad), InputError);
  const std::vector<int> neg = {-1};
  CHECK_THROWS_AS(softmax_cross_entropy(Matrix(1, 4), neg), InputError);
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix logits = random_matrix(4, 5, rng);
    std::vector<int> labels(4);
    for (int& y : labels) y = static_cast<int>(rng.below(5));
    const LossAndGrad lg = softmax_cross_entropy(logits, labels);
    const auto f = [&](std::span<const double> p) {
      return softmax_cross_entropy(Matrix(4, 5, std::vector<double>(p.begin(), p.end())), labels).loss;
    };
    const auto fd = finite_diff_grad(f, logits.values());
    CHECK(max_relative_error(fd, lg.grad.values()) < 1e-6);
  }
}

TEST_CASE("finite differences") {
  const auto square = [](std::span<const double> p) { return p[0] * p[0]; };
  const std::vector<double> three = {3.0};
  CHECK(std::abs(finite_diff_grad(square, three, 1e-5)[0] - 6.0) < 1e-6);
  const auto constant = [](std::span<const double>) { return 4.2; };
  const std::vector<double> p = {1.0, -2.0, 0.5};
  for (double g : finite_diff_grad(constant, p)) CHECK(std::abs(g) < 1e-9);
  CHECK_THROWS_AS(finite_diff_grad(square, three, 0.0), InputError);
  CHECK_THROWS_AS(finite_diff_grad(square, three, -1e-5), InputError);
  const auto blowup = [](std::span<const double> x) { return x[0] > 3.0 ? INFINITY : 0.0; };
  CHECK_THROWS_AS(finite_diff_grad(blowup, three), NumericError);
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == 0.5);
}
