#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdmp/model.hpp"

namespace pdmp {

struct GradcheckCase {
  FusionKind fusion;
  std::size_t modalities;
  double max_rel_error;
  std::size_t parameters;
};

/// Random small model and batch for gradient checks. Biases and gate
/// parameters are randomized too so no block sits at an init symmetry.
struct GradcheckProblem {
  Parameters params;
  Batch batch;
};
GradcheckProblem random_problem(FusionKind fusion, std::size_t modalities, std::uint64_t seed);

/// Analytic backward versus central differences on every parameter of one
/// problem. Returns the largest relative error (floor 1e-8).
double gradient_check(const GradcheckProblem& problem, double eps = 1e-5);

/// `count` problems cycling through concat/summation/gated and K = 2, 3.
std::vector<GradcheckCase> gradcheck_suite(std::size_t count, std::uint64_t seed, double eps = 1e-5);

}  // namespace pdmp
