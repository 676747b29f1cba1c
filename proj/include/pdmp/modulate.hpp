#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pdmp/matrix.hpp"
#include "pdmp/model.hpp"
#include "pdmp/profile.hpp"

namespace pdmp {

struct Vanilla {};

/// Performance-dominant modality prioritization: the encoder gradients of
/// m_p are multiplied by gamma_p, every other encoder by select_gamma_r.
struct Pdmp {
  double gamma_p = 1.0;
  ModalityProfile profile;
};

/// Equalizing baseline: damp the encoder of any modality whose contribution
/// share exceeds 1/K.
struct Balanced {
  double alpha = 1.0;
};

/// Multiply every gradient block, head included, by k.
struct NaiveLrScale {
  double k = 1.0;
};

using Strategy = std::variant<Vanilla, Pdmp, Balanced, NaiveLrScale>;

/// Throws InputError when a strategy parameter is out of range
/// (gamma_p >= 1, alpha > 0, k > 0, profile indices valid).
void validate(const Strategy& strategy);
std::string strategy_name(const Strategy& strategy);

/// Per-modality absolute logit mass and its normalized shares.
struct DependencyCoefficient {
  std::vector<double> mass;    // sum_j |s_i(j)| over batch and classes
  std::vector<double> shares;  // mass / total; sums to 1
  /// share_0 / share_1; only meaningful for K = 2.
  double w() const { return mass.at(0) / mass.at(1); }
};

/// w = sum |s_1| / sum |s_2| over the batch and classes.
/// Throws DegenerateContributionError when the denominator is 0.
double compute_w(const Matrix& s1, const Matrix& s2);

/// K-ary shares. Throws DegenerateContributionError when all mass is 0.
DependencyCoefficient contribution_shares(std::span<const Matrix> contributions);

/// Coefficient for a modality other than m_p: 1/gamma_p if it is the
/// optimization-dominant modality (and so competes with m_p), gamma_p otherwise.
double select_gamma_r(double gamma_p, std::size_t m_p, std::size_t m_o, std::size_t m_i);

/// Scalars applied to the gradient blocks by a strategy.
struct BlockScales {
  std::vector<double> encoder;  // per modality
  double head = 1.0;            // shared head blocks
  std::vector<double> head_partition;  // W_i / gate blocks owned by modality i
};

BlockScales block_scales(const Strategy& strategy, std::size_t num_modalities,
                         const DependencyCoefficient* current, bool scale_head_partitions);

/// Returns grads with every block multiplied by its strategy scalar. The
/// current coefficient is required for Balanced and ignored otherwise.
GradientSet apply_strategy(const GradientSet& grads, const Strategy& strategy,
                           const DependencyCoefficient* current,
                           bool scale_head_partitions = false);

}  // namespace pdmp
