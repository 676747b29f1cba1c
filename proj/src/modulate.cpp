#include "pdmp/modulate.hpp"

#include <cmath>
#include <sstream>

#include "pdmp/errors.hpp"
#include "pdmp/kernels.hpp"

namespace pdmp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void validate(const Strategy& strategy) {
  std::visit(Overloaded{
                 [](const Vanilla&) {},
                 [](const Pdmp& s) {
                   if (!(s.gamma_p >= 1.0) || !std::isfinite(s.gamma_p)) {
                     throw InputError("pdmp: gamma_p must be >= 1");
                   }
                   const auto k = s.profile.num_modalities();
                   if (k == 0 || s.profile.performance_dominant >= k ||
                       s.profile.optimization_dominant >= k) {
                     throw InputError("pdmp: profile indices out of range");
                   }
                 },
                 [](const Balanced& s) {
                   if (!(s.alpha > 0.0)) throw InputError("balanced: alpha must be > 0");
                 },
                 [](const NaiveLrScale& s) {
                   if (!(s.k > 0.0)) throw InputError("naive_lr_scale: k must be > 0");
                 },
             },
             strategy);
}

std::string strategy_name(const Strategy& strategy) {
  return std::visit(
      Overloaded{
          [](const Vanilla&) { return std::string("vanilla"); },
          [](const Pdmp& s) { return "pdmp(gamma_p=" + format_number(s.gamma_p) + ")"; },
          [](const Balanced& s) { return "balanced(alpha=" + format_number(s.alpha) + ")"; },
          [](const NaiveLrScale& s) { return "naive_lr_scale(k=" + format_number(s.k) + ")"; },
      },
      strategy);
}

double compute_w(const Matrix& s1, const Matrix& s2) {
  if (s1.empty() || s2.empty() || s1.rows() != s2.rows()) {
    throw DimensionError("compute_w: contributions " + s1.shape_string() + " and " +
                         s2.shape_string() + " must be non-empty with equal batch size");
  }
  const double den = sum_abs(s2);
  if (den == 0.0) throw DegenerateContributionError("compute_w: second contribution is all zero");
  return sum_abs(s1) / den;
}

DependencyCoefficient contribution_shares(std::span<const Matrix> contributions) {
  if (contributions.size() < 2) throw InputError("contribution_shares: need K >= 2");
  DependencyCoefficient out;
  double total = 0.0;
  for (const auto& s : contributions) {
    if (s.rows() != contributions.front().rows()) {
      throw DimensionError("contribution_shares: inconsistent batch size");
    }
    out.mass.push_back(sum_abs(s));
    total += out.mass.back();
  }
  if (total == 0.0) throw DegenerateContributionError("contribution_shares: all contributions are zero");
  for (double m : out.mass) out.shares.push_back(m / total);
  return out;
}

double select_gamma_r(double gamma_p, std::size_t m_p, std::size_t m_o, std::size_t m_i) {
  if (!(gamma_p >= 1.0)) throw InputError("select_gamma_r: gamma_p must be >= 1");
  if (m_i == m_p) throw InputError("select_gamma_r: m_i must differ from m_p");
  // When m_p is itself optimization-dominant nothing needs suppressing.
  if (m_p != m_o && m_i == m_o) return 1.0 / gamma_p;
  return gamma_p;
}

BlockScales block_scales(const Strategy& strategy, std::size_t k,
                         const DependencyCoefficient* current, bool scale_head_partitions) {
  BlockScales scales{std::vector<double>(k, 1.0), 1.0, std::vector<double>(k, 1.0)};
  std::visit(Overloaded{
                 [](const Vanilla&) {},
                 [&](const Pdmp& s) {
                   if (s.profile.num_modalities() != k) {
                     throw InputError("pdmp: profile has " +
                                      std::to_string(s.profile.num_modalities()) +
                                      " modalities, model has " + std::to_string(k));
                   }
                   const std::size_t m_p = s.profile.performance_dominant;
                   const std::size_t m_o = s.profile.optimization_dominant;
                   for (std::size_t i = 0; i < k; ++i) {
                     scales.encoder[i] = i == m_p ? s.gamma_p : select_gamma_r(s.gamma_p, m_p, m_o, i);
                   }
                   if (scale_head_partitions) scales.head_partition = scales.encoder;
                 },
                 [&](const Balanced& s) {
                   if (current == nullptr || current->shares.size() != k) {
                     throw InputError("balanced: current contribution shares are required");
                   }
                   const double fair = 1.0 / static_cast<double>(k);
                   for (std::size_t i = 0; i < k; ++i) {
                     const double share = current->shares[i];
                     if (share > fair) {
                       scales.encoder[i] =
                           1.0 / (1.0 + s.alpha * (static_cast<double>(k) * share - 1.0));
                     }
                   }
                   if (scale_head_partitions) scales.head_partition = scales.encoder;
                 },
                 [&](const NaiveLrScale& s) {
                   scales.encoder.assign(k, s.k);
                   scales.head = s.k;
                   scales.head_partition.assign(k, s.k);
                 },
             },
             strategy);
  return scales;
}

GradientSet apply_strategy(const GradientSet& grads, const Strategy& strategy,
                           const DependencyCoefficient* current, bool scale_head_partitions) {
  validate(strategy);
  const BlockScales scales =
      block_scales(strategy, grads.num_modalities(), current, scale_head_partitions);
  GradientSet out = grads;
  for_each_block(out, [&](const BlockRef& ref, Matrix& m) {
    double c = 1.0;
    if (ref.owner != kHeadOwner) {
      c = scales.encoder[static_cast<std::size_t>(ref.owner)];
    } else if (ref.modality >= 0) {
      c = scales.head_partition[static_cast<std::size_t>(ref.modality)];
    } else {
      c = scales.head;
    }
    if (c != 1.0) scale_inplace(m, c);
  });
  return out;
}

}  // namespace pdmp
