#include "pdmp/profile.hpp"

#include "pdmp/errors.hpp"

namespace pdmp {

std::string to_string(DominanceMethod method) {
  return method == DominanceMethod::branch_ranking ? "branch_ranking" : "early_unimodal";
}

DominanceMethod parse_dominance_method(std::string_view name) {
  if (name == "branch_ranking") return DominanceMethod::branch_ranking;
  if (name == "early_unimodal") return DominanceMethod::early_unimodal;
  throw InputError("unknown dominance method '" + std::string(name) +
                   "' (expected branch_ranking or early_unimodal)");
}

std::size_t argmax_first(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ModalityProfile fixed_profile(std::size_t num_modalities, std::size_t performance_dominant,
                              std::size_t optimization_dominant) {
  if (performance_dominant >= num_modalities || optimization_dominant >= num_modalities) {
    throw InputError("fixed_profile: dominant index out of range");
  }
  ModalityProfile p;
  p.performance_dominant = performance_dominant;
  p.optimization_dominant = optimization_dominant;
  p.unimodal_final_acc.assign(num_modalities, 0.0);
  p.unimodal_early_acc.assign(num_modalities, 0.0);
  p.multimodal_branch_acc.assign(num_modalities, 0.0);
  p.unimodal_final_acc[performance_dominant] = 1.0;
  p.unimodal_early_acc[optimization_dominant] = 1.0;
  p.multimodal_branch_acc[optimization_dominant] = 1.0;
  return p;
}

}  // namespace pdmp
