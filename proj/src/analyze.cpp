#include "pdmp/analyze.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/errors.hpp"
#include "pdmp/kernels.hpp"

namespace pdmp {

Split stratified_subset(const Split& split, int num_classes, double fraction, Rng rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("subset_fraction must be in (0, 1]");
  const auto m = static_cast<std::size_t>(num_classes);
  const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(split.size())));
  if (total < m) {
    throw InputError("subset of " + std::to_string(total) + " samples cannot cover " +
                     std::to_string(m) + " classes");
  }
  if (total >= split.size()) return split;

  std::vector<std::vector<std::size_t>> by_class(m);
  for (std::size_t i = 0; i < split.size(); ++i) by_class[static_cast<std::size_t>(split.labels[i])].push_back(i);
  for (std::size_t c = 0; c < m; ++c) {
    if (by_class[c].empty()) throw InputError("class " + std::to_string(c) + " has no samples to subset");
  }
  // Water-fill: give each class an equal quota, redistribute what small
  // classes cannot use.
  std::vector<std::size_t> quota(m, 0);
  std::size_t remaining = total;
  while (remaining > 0) {
    std::size_t open = 0;
    for (std::size_t c = 0; c < m; ++c) open += quota[c] < by_class[c].size() ? 1 : 0;
    const std::size_t each = std::max<std::size_t>(1, remaining / open);
    for (std::size_t c = 0; c < m && remaining > 0; ++c) {
      const std::size_t add = std::min({each, by_class[c].size() - quota[c], remaining});
      quota[c] += add;
      remaining -= add;
    }
  }
  std::vector<std::size_t> rows;
  for (std::size_t c = 0; c < m; ++c) {
    rng.shuffle(std::span<std::size_t>(by_class[c]));
    rows.insert(rows.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(rows.begin(), rows.end());
  return split.select_rows(rows);
}

AnalysisResult run_modality_analysis(const Dataset& data, const AnalysisConfig& config) {
  const int epochs = config.train.epochs;
  if (epochs < 1) throw InputError("analysis needs T >= 1 epochs");
  const int early = config.early_epoch == 0 ? std::max(1, epochs / 10) : config.early_epoch;
  if (config.early_epoch != 0 && (early < 1 || early >= epochs)) {
    throw InputError("early_epoch must be in [1, T)");
  }

  Dataset work = data;
  work.train = stratified_subset(data.train, data.num_classes(), config.subset_fraction,
                                 Rng(config.train.seed).derive("subset"));

  // T is an update budget: a subset gets proportionally more epochs so every
  // model takes at least as many SGD steps as on the full split.
  const std::size_t batch = std::max<std::size_t>(config.train.batch_size, 1);
  const auto steps = [&](std::size_t n) { return (n + batch - 1) / batch; };
  const std::size_t full_steps = steps(data.train.size());
  const std::size_t sub_steps = steps(work.train.size());
  const auto stretch = [&](int e) {
    return static_cast<int>((static_cast<std::size_t>(e) * full_steps + sub_steps - 1) / sub_steps);
  };

  TrainConfig tc = config.train;
  tc.strategy = Vanilla{};
  tc.eval_every = 1;
  tc.epochs = stretch(epochs);

  const std::size_t k = data.num_modalities();
  AnalysisResult result;
  result.early_epoch = std::max(1, std::min(stretch(early), tc.epochs - 1));
  ModalityProfile& profile = result.profile;
  profile.method_used = config.method;
  profile.subset_fraction = config.subset_fraction;

  // Every unimodal model sees the same init and shuffle streams.
  TrainConfig uni = tc;
  uni.fusion = FusionKind::concat;
  for (std::size_t m = 0; m < k; ++m) {
    const TrainResult r = train(uni, work.select_modality(m));
    std::vector<double> curve;
    for (const auto& rec : r.log.records) curve.push_back(rec.val_acc);
    profile.unimodal_early_acc.push_back(curve.at(static_cast<std::size_t>(result.early_epoch - 1)));
    profile.unimodal_final_acc.push_back(curve.back());
    result.unimodal_curves.push_back(std::move(curve));
  }

  const TrainResult probe = train(tc, work);
  profile.multimodal_branch_acc = probe.log.records.back().branch_acc;

  profile.performance_dominant = argmax_first(profile.unimodal_final_acc);
  profile.optimization_dominant = config.method == DominanceMethod::branch_ranking
                                      ? argmax_first(profile.multimodal_branch_acc)
                                      : argmax_first(profile.unimodal_early_acc);
  return result;
}

MIEstimate estimate_mi(std::span<const int> predictions, std::span<const int> labels,
                       int num_classes) {
  if (predictions.empty()) throw InputError("estimate_mi: empty input");
  if (predictions.size() != labels.size()) throw InputError("estimate_mi: length mismatch");
  const auto m = static_cast<std::size_t>(num_classes);
  MIEstimate out{0.0, Matrix(m, m)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] < 0 || predictions[i] >= num_classes || labels[i] < 0 ||
        labels[i] >= num_classes) {
      throw InputError("estimate_mi: value outside [0, M)");
    }
    out.joint_counts(static_cast<std::size_t>(predictions[i]), static_cast<std::size_t>(labels[i])) += 1.0;
  }
  // Ratios are formed from integer counts, so independence gives log2(1) = 0 exactly.
  const double n = static_cast<double>(labels.size());
  std::vector<double> c_pred(m, 0.0), c_true(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      c_pred[a] += out.joint_counts(a, b);
      c_true[b] += out.joint_counts(a, b);
    }
  }
  double bits = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const double c = out.joint_counts(a, b);
      if (c > 0.0) bits += c / n * std::log2(c * n / (c_pred[a] * c_true[b]));
    }
  }
  out.bits = std::max(0.0, bits);
  return out;
}

std::vector<MIEstimate> mi_dominance_report(const Parameters& params, const Split& split) {
  const ForwardCache cache = forward(params, whole_split(split));
  const int m = static_cast<int>(params.num_classes());
  std::vector<MIEstimate> out;
  for (const auto& s : cache.contributions) out.push_back(estimate_mi(argmax_rows(s), split.labels, m));
  out.push_back(estimate_mi(argmax_rows(cache.logits), split.labels, m));
  return out;
}

}  // namespace pdmp
