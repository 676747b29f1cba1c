#pragma once

#include <span>
#include <vector>

#include "pdmp/datagen.hpp"
#include "pdmp/matrix.hpp"
#include "pdmp/model.hpp"
#include "pdmp/profile.hpp"
#include "pdmp/trainer.hpp"

namespace pdmp {

struct AnalysisConfig {
  /// Optimizer settings and seed for every model trained during analysis.
  /// `train.epochs` sets the budget T in full-split epochs; on a subset the
  /// epoch count is stretched so the number of SGD steps stays the same.
  /// Strategy is ignored (always vanilla).
  TrainConfig train;
  double subset_fraction = 1.0;
  /// Epoch whose unimodal validation accuracy ranks optimization
  /// dominance, in full-split epochs (stretched like T); 0 selects
  /// max(1, T / 10).
  int early_epoch = 0;
  DominanceMethod method = DominanceMethod::branch_ranking;
};

struct AnalysisResult {
  ModalityProfile profile;
  /// unimodal_curves[m][e] = validation accuracy of modality m's unimodal
  /// model after epoch e + 1 of the (possibly stretched) schedule.
  std::vector<std::vector<double>> unimodal_curves;
  int early_epoch = 1;  // in the same epochs as the curves
};

/// Class-stratified subset of a split: round(fraction * N) rows, spread over
/// classes as evenly as availability allows, chosen by `rng`. Rows keep their
/// original order. Throws InputError when fewer than M rows would remain.
Split stratified_subset(const Split& split, int num_classes, double fraction, Rng rng);

/// Trains one unimodal model per modality and a short vanilla multimodal
/// probe, then ranks them. m_p is the best final unimodal validation
/// accuracy. m_o is the best multimodal branch accuracy (branch_ranking) or
/// the best unimodal accuracy at early_epoch (early_unimodal); both rankings
/// are always recorded in the profile. Ties go to the lower index.
AnalysisResult run_modality_analysis(const Dataset& data, const AnalysisConfig& config);

struct MIEstimate {
  double bits = 0.0;
  Matrix joint_counts;  // M x M, rows = predicted class, cols = true class
};

/// Plug-in mutual information (bits) between two discrete label sequences,
/// from their empirical joint distribution. No bias correction.
MIEstimate estimate_mi(std::span<const int> predictions, std::span<const int> labels,
                       int num_classes);

/// K + 1 estimates: argmax s_i for each modality, then the fused argmax.
std::vector<MIEstimate> mi_dominance_report(const Parameters& params, const Split& split);

}  // namespace pdmp
