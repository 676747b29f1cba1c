#pragma once

// File formats.
//
// Dataset directory (gen-data):
//   header.json  {"spec": {...DatasetSpec...}, "splits": {"train": N, "val": N, "test": N}}
//   train.csv, val.csv, test.csv
//     no header row; one row per sample:
//     label, modality-0 features..., modality-1 features..., ...
//
// Checkpoint:
//   <path>.json  architecture: fusion, K, classes, input dims, widths, blocks
//   <path>.csv   header "block,row,col,value", one row per parameter in
//                for_each_block order, row-major within each block
//
// Numbers are written in shortest round-trip form, so reading a file back
// reproduces the doubles exactly.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "pdmp/analyze.hpp"
#include "pdmp/datagen.hpp"
#include "pdmp/experiments.hpp"
#include "pdmp/model.hpp"
#include "pdmp/profile.hpp"
#include "pdmp/trainer.hpp"

namespace pdmp {

std::string format_double(double v);

nlohmann::json to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

void write_dataset(const Dataset& data, const std::string& dir);
Dataset read_dataset(const std::string& dir);

/// TrainConfig <-> JSON with the TrainConfig keys. Unknown keys throw
/// ConfigError; missing keys keep their defaults. Strategy objects:
///   {"kind": "vanilla"} | {"kind": "pdmp", "gamma_p": g}
///   {"kind": "balanced", "alpha": a} | {"kind": "naive_lr_scale", "k": k}
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig read_train_config(const std::string& path);

nlohmann::json to_json(const Strategy& strategy);
Strategy strategy_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModalityProfile& profile);
ModalityProfile profile_from_json(const nlohmann::json& j);
ModalityProfile read_profile(const std::string& path);

/// Columns: epoch, train_loss, val_acc, branch_acc_0..K-1, w_mean,
/// share_0..K-1. w_mean is oriented modality 0 over modality 1; an absent
/// value is an empty field.
void write_metrics_csv(std::ostream& out, const MetricsLog& log, std::size_t num_modalities);
void write_metrics_csv(const std::string& path, const MetricsLog& log, std::size_t num_modalities);

/// Columns: epoch, unimodal_acc_0..K-1 (validation accuracy).
void write_curves_csv(const std::string& path, const AnalysisResult& analysis);

/// Aggregate rows: strategy, gamma_p, mean_acc, std_acc, mean_macro_f1, runs, diverged.
void write_summary_csv(const std::string& path, const ExperimentTable& table);
/// Per-run rows: strategy, gamma_p, seed, test_acc, test_macro_f1, diverged.
void write_runs_csv(const std::string& path, const ExperimentTable& table);

void write_checkpoint(const std::string& path_stem, const Parameters& params);
Parameters read_checkpoint(const std::string& path_stem);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace pdmp
