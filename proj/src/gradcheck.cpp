#include "pdmp/gradcheck.hpp"

#include "pdmp/finite_diff.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

GradcheckProblem random_problem(FusionKind fusion, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  Rng shape_rng = rng.derive("shape");
  ModelConfig mc;
  mc.fusion = fusion;
  mc.num_classes = 3 + static_cast<int>(shape_rng.below(2));
  const std::size_t d = 3 + shape_rng.below(3);
  mc.encoder_widths = {4 + shape_rng.below(3), d};
  for (std::size_t i = 0; i < k; ++i) mc.input_dims.push_back(2 + shape_rng.below(4));

  GradcheckProblem p{init_model(mc, rng.derive("init")), {}};
  Rng jitter = rng.derive("jitter");
  for_each_block(p.params, [&](const BlockRef&, Matrix& m) {
    for (double& v : m.values()) v += 0.3 * jitter.normal();
  });

  Rng data = rng.derive("batch");
  const std::size_t batch = 5;
  for (std::size_t i = 0; i < k; ++i) {
    Matrix x(batch, mc.input_dims[i]);
    for (double& v : x.values()) v = data.normal();
    p.batch.inputs.push_back(std::move(x));
  }
  for (std::size_t r = 0; r < batch; ++r) {
    p.batch.labels.push_back(static_cast<int>(data.below(static_cast<std::uint64_t>(mc.num_classes))));
  }
  return p;
}

double gradient_check(const GradcheckProblem& problem, double eps) {
  const ForwardCache cache = forward(problem.params, problem.batch);
  const BackwardResult analytic = backward(problem.params, cache, problem.batch.labels);
  const std::vector<double> flat_grad = flatten(analytic.grads);

  Parameters scratch = problem.params;
  const auto objective = [&](std::span<const double> values) {
    unflatten(values, scratch);
    return loss(scratch, problem.batch);
  };
  const std::vector<double> numeric = finite_diff_grad(objective, flatten(problem.params), eps);
  return max_relative_error(flat_grad, numeric);
}

std::vector<GradcheckCase> gradcheck_suite(std::size_t count, std::uint64_t seed, double eps) {
  constexpr FusionKind kinds[] = {FusionKind::concat, FusionKind::summation, FusionKind::gated};
  std::vector<GradcheckCase> out;
  const Rng root(seed);
  for (std::size_t c = 0; c < count; ++c) {
    const FusionKind fusion = kinds[c % 3];
    const std::size_t k = 2 + (c / 3) % 2;
    const GradcheckProblem problem = random_problem(fusion, k, root.derive("case", c).seed());
    out.push_back({fusion, k, gradient_check(problem, eps), parameter_count(problem.params)});
  }
  return out;
}

}  // namespace pdmp
