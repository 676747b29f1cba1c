#include "pdmp/experiments.hpp"

#include <cmath>
#include <exception>

#include "pdmp/errors.hpp"

namespace pdmp {
namespace {

double gamma_of(const Strategy& s) {
  if (const auto* p = std::get_if<Pdmp>(&s)) return p->gamma_p;
  if (const auto* n = std::get_if<NaiveLrScale>(&s)) return n->k;
  return 1.0;
}

RunOutcome run_one(const TrainConfig& config, const Dataset& data, const ModalityProfile* profile) {
  RunOutcome out;
  out.strategy = strategy_name(config.strategy);
  out.gamma_p = gamma_of(config.strategy);
  out.seed = config.seed;
  try {
    out.log = train(config, data, profile).log;
  } catch (const DivergenceError&) {
    out.diverged = true;
    out.log.test_acc = 1.0 / static_cast<double>(data.num_classes());
    out.log.test_macro_f1 = 0.0;
  }
  return out;
}

ExperimentTable tabulate(std::vector<RunOutcome> runs, std::size_t per_row) {
  ExperimentTable table;
  for (std::size_t start = 0; start < runs.size(); start += per_row) {
    table.rows.push_back(aggregate(std::span(runs).subspan(start, per_row)));
  }
  table.runs = std::move(runs);
  return table;
}

}  // namespace

Aggregate aggregate(std::span<const RunOutcome> runs) {
  Aggregate a;
  if (runs.empty()) return a;
  a.strategy = runs.front().strategy;
  a.gamma_p = runs.front().gamma_p;
  a.runs = runs.size();
  for (const auto& r : runs) {
    a.mean_acc += r.log.test_acc;
    a.mean_macro_f1 += r.log.test_macro_f1;
    a.diverged += r.diverged ? 1 : 0;
  }
  const double n = static_cast<double>(runs.size());
  a.mean_acc /= n;
  a.mean_macro_f1 /= n;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.log.test_acc - a.mean_acc) * (r.log.test_acc - a.mean_acc);
    a.std_acc = std::sqrt(ss / (n - 1.0));
  }
  return a;
}

std::vector<RunOutcome> run_grid(std::span<const TrainConfig> configs, const Dataset& data,
                                 const ModalityProfile* profile) {
  std::vector<RunOutcome> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const auto n = static_cast<long>(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = run_one(configs[idx], data, profile);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ExperimentTable sweep_gamma(const TrainConfig& base, const Dataset& data,
                            const ModalityProfile& profile, std::span<const double> gammas,
                            std::span<const std::uint64_t> seeds) {
  if (gammas.empty()) throw InputError("sweep_gamma: no gamma values");
  if (seeds.empty()) throw InputError("sweep_gamma: no seeds");
  std::vector<TrainConfig> configs;
  for (double g : gammas) {
    if (!(g >= 1.0)) throw InputError("sweep_gamma: gamma values must be >= 1");
    for (std::uint64_t s : seeds) {
      TrainConfig c = base;
      c.strategy = Pdmp{g, profile};
      c.seed = s;
      configs.push_back(std::move(c));
    }
  }
  return tabulate(run_grid(configs, data, &profile), seeds.size());
}

ExperimentTable compare_strategies(const TrainConfig& base, const Dataset& data,
                                   const ModalityProfile* profile,
                                   std::span<const Strategy> strategies,
                                   std::span<const std::uint64_t> seeds) {
  if (strategies.size() < 2) throw InputError("compare_strategies: need at least 2 strategies");
  if (seeds.size() < 3) throw InputError("compare_strategies: need at least 3 seeds");
  std::vector<TrainConfig> configs;
  for (const auto& st : strategies) {
    for (std::uint64_t s : seeds) {
      TrainConfig c = base;
      c.strategy = st;
      c.seed = s;
      configs.push_back(std::move(c));
    }
  }
  return tabulate(run_grid(configs, data, profile), seeds.size());
}

double best_gamma(const ExperimentTable& sweep) {
  if (sweep.rows.empty()) throw InputError("best_gamma: empty sweep");
  const Aggregate* best = &sweep.rows.front();
  for (const auto& r : sweep.rows) {
    if (r.mean_acc > best->mean_acc || (r.mean_acc == best->mean_acc && r.gamma_p < best->gamma_p)) {
      best = &r;
    }
  }
  return best->gamma_p;
}

}  // namespace pdmp
