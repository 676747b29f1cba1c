#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdmp/trainer.hpp"

namespace pdmp {

/// One (strategy, seed) training run. A diverged run scores chance
/// accuracy (1/M) and macro-F1 0, and keeps the records made before the
/// failure.
struct RunOutcome {
  std::string strategy;
  double gamma_p = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  MetricsLog log;
};

struct Aggregate {
  std::string strategy;
  double gamma_p = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation over seeds
  double mean_macro_f1 = 0.0;
  std::size_t runs = 0;
  std::size_t diverged = 0;
};

struct ExperimentTable {
  std::vector<Aggregate> rows;
  std::vector<RunOutcome> runs;  // row-major: rows[i] owns runs[i * seeds .. ]
};

/// Runs every (config, seed) pair, concurrently when OpenMP is available.
/// Output order follows the input order, not completion order.
std::vector<RunOutcome> run_grid(std::span<const TrainConfig> configs, const Dataset& data,
                                 const ModalityProfile* profile);

/// PDMP accuracy for each gamma_p (>= 1) over `seeds`.
ExperimentTable sweep_gamma(const TrainConfig& base, const Dataset& data,
                            const ModalityProfile& profile, std::span<const double> gammas,
                            std::span<const std::uint64_t> seeds);

/// Aggregates per strategy (at least two) over seeds (at least three).
ExperimentTable compare_strategies(const TrainConfig& base, const Dataset& data,
                                   const ModalityProfile* profile,
                                   std::span<const Strategy> strategies,
                                   std::span<const std::uint64_t> seeds);

/// Gamma with the highest mean accuracy; ties go to the smaller gamma.
double best_gamma(const ExperimentTable& sweep);

Aggregate aggregate(std::span<const RunOutcome> runs);

}  // namespace pdmp
