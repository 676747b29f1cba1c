// Command-line front end: data generation, modality analysis, training,
// gamma sweeps and strategy comparisons.
//
// Exit codes: 0 success, 1 gradcheck failure or internal error,
// 2 config/usage error, 3 training divergence, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdmp/analyze.hpp"
#include "pdmp/datagen.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/experiments.hpp"
#include "pdmp/gradcheck.hpp"
#include "pdmp/io.hpp"
#include "pdmp/trainer.hpp"

namespace {

using namespace pdmp;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, dots));
      const auto hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw ConfigError("seed range '" + text + "' is empty");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      return seeds;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      seeds.push_back(std::stoull(text.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse seeds '" + text + "' (use 0..9 or 1,2,3)");
  }
  return seeds;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  try {
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      out.push_back(std::stod(text.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse number list '" + text + "'");
  }
  return out;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  const auto stem = p.stem().string();
  p.replace_filename(stem + suffix);
  return p.string();
}

ModalityProfile profile_for(const TrainConfig& config, const Dataset& data, const std::string& profile_path) {
  if (!profile_path.empty()) return read_profile(profile_path);
  AnalysisConfig ac;
  ac.train = config;
  std::cerr << "no --profile given; running modality analysis first\n";
  return run_modality_analysis(data, ac).profile;
}

void print_table(const ExperimentTable& table) {
  for (const auto& r : table.rows) {
    std::cout << r.strategy << "  mean_acc=" << r.mean_acc << "  std=" << r.std_acc
              << "  macro_f1=" << r.mean_macro_f1 << "  diverged=" << r.diverged << "/" << r.runs << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modality-prioritized gradient modulation laboratory"};
  app.require_subcommand(1);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the analytic backward pass");
  std::size_t gc_count = 20;
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-4;
  gradcheck->add_option("--count", gc_count, "Number of random model configurations");
  gradcheck->add_option("--seed", gc_seed, "Seed for the random configurations");
  gradcheck->add_option("--tol", gc_tol, "Maximum allowed relative error");

  auto* gen = app.add_subcommand("gen-data", "Write a preset dataset as header.json + CSV splits");
  std::string gen_preset;
  std::string gen_out;
  gen->add_option("--preset", gen_preset, "cremad-like, ave-like or cefa-like")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* analyze = app.add_subcommand("analyze", "Rank modalities with unimodal and branch probes");
  std::string an_config;
  std::string an_out;
  std::string an_curves;
  double an_subset = 1.0;
  int an_early = 0;
  std::string an_method = "branch_ranking";
  analyze->add_option("--config", an_config, "TrainConfig JSON")->required();
  analyze->add_option("--out", an_out, "Profile JSON path")->required();
  analyze->add_option("--curves", an_curves, "Unimodal curves CSV (default: <out>_curves.csv)");
  analyze->add_option("--subset-fraction", an_subset, "Class-stratified training subset in (0, 1]");
  analyze->add_option("--early-epoch", an_early, "Epoch for the early ranking (0: 10% of epochs)");
  analyze->add_option("--method", an_method, "branch_ranking or early_unimodal");

  auto* trn = app.add_subcommand("train", "Train one model and write per-epoch metrics");
  std::string tr_config;
  std::string tr_profile;
  std::string tr_out;
  std::string tr_checkpoint;
  trn->add_option("--config", tr_config, "TrainConfig JSON")->required();
  trn->add_option("--profile", tr_profile, "Profile JSON (required for pdmp)");
  trn->add_option("--out", tr_out, "Metrics CSV path")->required();
  trn->add_option("--checkpoint", tr_checkpoint, "Write final parameters to <stem>.json/.csv");

  auto* sweep = app.add_subcommand("sweep", "Sweep gamma_p for the pdmp strategy");
  std::string sw_config;
  std::string sw_gammas;
  std::string sw_seeds;
  std::string sw_out;
  std::string sw_profile;
  sweep->add_option("--config", sw_config, "TrainConfig JSON")->required();
  sweep->add_option("--gammas", sw_gammas, "Comma-separated gamma_p values")->required();
  sweep->add_option("--seeds", sw_seeds, "Seeds, e.g. 0..9 or 1,2,3")->required();
  sweep->add_option("--out", sw_out, "Aggregate CSV (per-run grid goes to <out>_runs.csv)")->required();
  sweep->add_option("--profile", sw_profile, "Profile JSON (default: run analysis)");

  auto* compare = app.add_subcommand("compare", "Compare strategies over seeds");
  std::string cmp_config;
  std::string cmp_strategies;
  std::string cmp_seeds;
  std::string cmp_out;
  std::string cmp_profile;
  double cmp_gamma = 15.0;
  double cmp_alpha = 1.0;
  compare->add_option("--config", cmp_config, "TrainConfig JSON")->required();
  compare->add_option("--strategies", cmp_strategies, "vanilla,balanced,pdmp,naive_lr_scale")->required();
  compare->add_option("--seeds", cmp_seeds, "Seeds, e.g. 0..9 or 1,2,3")->required();
  compare->add_option("--out", cmp_out, "Aggregate CSV (per-run results go to <out>_runs.csv)")->required();
  compare->add_option("--profile", cmp_profile, "Profile JSON (default: run analysis if pdmp is listed)");
  compare->add_option("--gamma", cmp_gamma, "gamma_p for pdmp and k for naive_lr_scale");
  compare->add_option("--alpha", cmp_alpha, "alpha for balanced");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gradcheck) {
      bool ok = true;
      for (const auto& c : gradcheck_suite(gc_count, gc_seed)) {
        const bool pass = c.max_rel_error < gc_tol;
        ok = ok && pass;
        std::cout << (pass ? "ok   " : "FAIL ") << to_string(c.fusion) << " K=" << c.modalities
                  << " params=" << c.parameters << " max_rel_err=" << c.max_rel_error << "\n";
      }
      return ok ? 0 : 1;
    }
    if (*gen) {
      const Dataset data = generate(preset(gen_preset));
      write_dataset(data, gen_out);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }
    if (*analyze) {
      AnalysisConfig ac;
      ac.train = read_train_config(an_config);
      ac.subset_fraction = an_subset;
      ac.early_epoch = an_early;
      ac.method = parse_dominance_method(an_method);
      const Dataset data = load_dataset(ac.train.dataset);
      const AnalysisResult result = run_modality_analysis(data, ac);
      write_text(an_out, to_json(result.profile).dump(2) + "\n");
      write_curves_csv(an_curves.empty() ? sibling(an_out, "_curves.csv") : an_curves, result);
      std::cout << to_json(result.profile).dump() << "\n";
      return 0;
    }
    if (*trn) {
      const TrainConfig config = read_train_config(tr_config);
      const Dataset data = load_dataset(config.dataset);
      std::optional<ModalityProfile> profile;
      if (!tr_profile.empty()) profile = read_profile(tr_profile);
      const TrainResult result = train(config, data, profile ? &*profile : nullptr);
      write_metrics_csv(tr_out, result.log, data.num_modalities());
      if (!tr_checkpoint.empty()) write_checkpoint(tr_checkpoint, result.params);
      const nlohmann::json summary = {{"test_acc", result.log.test_acc},
                                      {"test_macro_f1", result.log.test_macro_f1},
                                      {"test_branch_acc", result.log.test_branch_acc}};
      std::cout << summary.dump() << "\n";
      return 0;
    }
    if (*sweep) {
      const TrainConfig config = read_train_config(sw_config);
      const Dataset data = load_dataset(config.dataset);
      const ModalityProfile profile = profile_for(config, data, sw_profile);
      const auto gammas = parse_doubles(sw_gammas);
      const auto seeds = parse_seeds(sw_seeds);
      const ExperimentTable table = sweep_gamma(config, data, profile, gammas, seeds);
      write_summary_csv(sw_out, table);
      write_runs_csv(sibling(sw_out, "_runs.csv"), table);
      print_table(table);
      std::cout << "best gamma_p: " << best_gamma(table) << "\n";
      return 0;
    }
    if (*compare) {
      const TrainConfig config = read_train_config(cmp_config);
      const Dataset data = load_dataset(config.dataset);
      std::vector<Strategy> strategies;
      bool needs_profile = false;
      std::size_t start = 0;
      while (start <= cmp_strategies.size()) {
        const auto comma = cmp_strategies.find(',', start);
        const std::string name = cmp_strategies.substr(start, comma - start);
        if (name == "vanilla") strategies.emplace_back(Vanilla{});
        else if (name == "balanced") strategies.emplace_back(Balanced{cmp_alpha});
        else if (name == "pdmp") {
          strategies.emplace_back(Pdmp{cmp_gamma, {}});
          needs_profile = true;
        } else if (name == "naive_lr_scale" || name == "naive") strategies.emplace_back(NaiveLrScale{cmp_gamma});
        else throw ConfigError("unknown strategy '" + name + "'");
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      std::optional<ModalityProfile> profile;
      if (needs_profile) profile = profile_for(config, data, cmp_profile);
      const auto seeds = parse_seeds(cmp_seeds);
      const ExperimentTable table =
          compare_strategies(config, data, profile ? &*profile : nullptr, strategies, seeds);
      write_summary_csv(cmp_out, table);
      write_runs_csv(sibling(cmp_out, "_runs.csv"), table);
      print_table(table);
      return 0;
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    // ConfigError, InputError and DimensionError all derive from invalid_argument.
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
