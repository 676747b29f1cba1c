#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/datagen.hpp"
#include "pdmp/model.hpp"
#include "pdmp/modulate.hpp"
#include "pdmp/profile.hpp"

namespace pdmp {

struct TrainConfig {
  /// Preset name, or a directory written by `gen-data`.
  std::string dataset = "cremad-like";
  FusionKind fusion = FusionKind::concat;
  std::vector<std::size_t> encoder_widths = {64, 64, 32};
  int epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  Strategy strategy = Vanilla{};
  std::uint64_t seed = 0;
  int eval_every = 1;
  bool scale_head_partitions = false;
};

/// Throws ConfigError on a violated bound.
void validate(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  std::vector<double> branch_acc;
  /// Pooled over the epoch's training batches: sum |s_0| / sum |s_1|.
  /// Absent for K != 2 or when modality 1 contributed nothing.
  std::optional<double> w_mean;
  /// Pooled contribution shares over the epoch's training batches (K >= 2).
  std::vector<double> shares;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct MetricsLog {
  std::vector<EpochRecord> records;
  double test_acc = 0.0;
  double test_macro_f1 = 0.0;
  std::vector<double> test_branch_acc;

  friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

struct TrainResult {
  MetricsLog log;
  Parameters params;
};

/// Seen before each optimizer step, with the parameters the step starts from.
struct StepEvent {
  int epoch;
  std::size_t step;
  const Parameters& params;
  const Batch& batch;
};
using StepObserver = std::function<void(const StepEvent&)>;

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// samples scores F1 = 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes);

/// Momentum SGD with L2 weight decay: v <- mu v + g + lambda theta;
/// theta <- theta - eta v.
void sgd_step(Parameters& params, Parameters& velocity, const GradientSet& grads,
              double learning_rate, double momentum, double weight_decay);

/// Trains on `data` with the configured strategy. A Pdmp strategy takes its
/// dominance indices from `profile`, which must then be non-null and have K
/// entries. Throws ConfigError for a bad config and DivergenceError on a
/// non-finite loss.
TrainResult train(const TrainConfig& config, const Dataset& data,
                  const ModalityProfile* profile = nullptr, const StepObserver& observer = {});

/// Rng stream names used by `train`: init from Rng(seed).derive("init"),
/// epoch e's shuffle from Rng(seed).derive("shuffle", e).
Parameters initial_parameters(const TrainConfig& config, const Dataset& data);

/// Preset name -> generated preset; otherwise loads a gen-data directory.
Dataset load_dataset(const std::string& source);

}  // namespace pdmp
