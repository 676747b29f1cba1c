#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pdmp {

enum class DominanceMethod { branch_ranking, early_unimodal };

std::string to_string(DominanceMethod method);
DominanceMethod parse_dominance_method(std::string_view name);

/// Outcome of the modality-analysis stage.
struct ModalityProfile {
  std::size_t performance_dominant = 0;   // m_p
  std::size_t optimization_dominant = 0;  // m_o
  std::vector<double> unimodal_final_acc;
  std::vector<double> unimodal_early_acc;
  std::vector<double> multimodal_branch_acc;
  DominanceMethod method_used = DominanceMethod::branch_ranking;
  double subset_fraction = 1.0;

  std::size_t num_modalities() const noexcept { return unimodal_final_acc.size(); }
  friend bool operator==(const ModalityProfile&, const ModalityProfile&) = default;
};

/// Index of the largest value; ties go to the lower index.
std::size_t argmax_first(const std::vector<double>& values);

/// Profile built from known dominance indices only (accuracy vectors empty
/// except for sizing). Used where the ranking is fixed by construction.
ModalityProfile fixed_profile(std::size_t num_modalities, std::size_t performance_dominant,
                              std::size_t optimization_dominant);

}  // namespace pdmp
