#include "pdmp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdmp/errors.hpp"
#include "pdmp/io.hpp"
#include "pdmp/kernels.hpp"

namespace pdmp {
namespace {

void evaluate_split(const Parameters& params, const Split& split, double& fused_acc,
                    std::vector<double>& branch_acc, std::vector<int>* predictions = nullptr) {
  const ForwardCache cache = forward(params, whole_split(split));
  auto pred = argmax_rows(cache.logits);
  fused_acc = accuracy(pred, split.labels);
  branch_acc.clear();
  for (const auto& s : cache.contributions) branch_acc.push_back(accuracy(argmax_rows(s), split.labels));
  if (predictions != nullptr) *predictions = std::move(pred);
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (c.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (c.encoder_widths.empty()) throw ConfigError("encoder_widths must not be empty");
  if (std::find(c.encoder_widths.begin(), c.encoder_widths.end(), 0u) != c.encoder_widths.end()) {
    throw ConfigError("encoder_widths must be positive");
  }
  try {
    if (!std::holds_alternative<Pdmp>(c.strategy)) validate(c.strategy);
    else if (!(std::get<Pdmp>(c.strategy).gamma_p >= 1.0)) throw InputError("pdmp: gamma_p must be >= 1");
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  if (predictions.size() != labels.size()) throw DimensionError("macro_f1: length mismatch");
  const auto m = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(m, 0), fp(m, 0), fn(m, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = static_cast<std::size_t>(predictions[i]);
    const auto y = static_cast<std::size_t>(labels[i]);
    if (p == y) {
      ++tp[y];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t den = 2 * tp[c] + fp[c] + fn[c];
    total += den == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(den);
  }
  return total / static_cast<double>(m);
}

void sgd_step(Parameters& params, Parameters& velocity, const GradientSet& grads,
              double learning_rate, double momentum, double weight_decay) {
  std::vector<Matrix*> vel;
  std::vector<const Matrix*> grad;
  for_each_block(velocity, [&](const BlockRef&, Matrix& m) { vel.push_back(&m); });
  for_each_block(grads, [&](const BlockRef&, const Matrix& m) { grad.push_back(&m); });
  std::size_t b = 0;
  for_each_block(params, [&](const BlockRef& ref, Matrix& theta) {
    if (b >= vel.size() || b >= grad.size() || !theta.same_shape(*vel[b]) ||
        !theta.same_shape(*grad[b])) {
      throw DimensionError("sgd_step: gradient block " + ref.name + " does not mirror parameters");
    }
    auto t = theta.values();
    auto v = vel[b]->values();
    const auto g = grad[b]->values();
    for (std::size_t i = 0; i < t.size(); ++i) {
      v[i] = momentum * v[i] + g[i] + weight_decay * t[i];
      t[i] -= learning_rate * v[i];
    }
    ++b;
  });
}

Parameters initial_parameters(const TrainConfig& config, const Dataset& data) {
  ModelConfig mc;
  for (const auto& f : data.train.features) mc.input_dims.push_back(f.cols());
  mc.encoder_widths = config.encoder_widths;
  mc.num_classes = data.num_classes();
  mc.fusion = config.fusion;
  return init_model(mc, Rng(config.seed).derive("init"));
}

TrainResult train(const TrainConfig& config, const Dataset& data, const ModalityProfile* profile,
                  const StepObserver& observer) {
  validate(config);
  const std::size_t k = data.num_modalities();
  Strategy strategy = config.strategy;
  if (auto* pdmp = std::get_if<Pdmp>(&strategy)) {
    if (profile == nullptr) throw ConfigError("pdmp strategy requires a modality profile");
    if (profile->num_modalities() != k) {
      throw ConfigError("profile has " + std::to_string(profile->num_modalities()) +
                        " modalities, dataset has " + std::to_string(k));
    }
    pdmp->profile = *profile;
  }
  try {
    validate(strategy);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }

  TrainResult result{{}, initial_parameters(config, data)};
  Parameters& params = result.params;
  Parameters velocity = zeros_like(params);
  const Rng root(config.seed);
  const std::size_t n = data.train.size();
  std::vector<std::size_t> order(n);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = root.derive("shuffle", static_cast<std::uint64_t>(epoch));
    shuffle.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::vector<double> mass(k, 0.0);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const Batch batch = make_batch(data.train, std::span(order).subspan(start, end - start));
      if (observer) observer(StepEvent{epoch, batches, params, batch});
      const ForwardCache cache = forward(params, batch);
      BackwardResult br = backward(params, cache, batch.labels);
      if (!std::isfinite(br.loss)) {
        throw DivergenceError(epoch, "training diverged: non-finite loss in epoch " +
                                         std::to_string(epoch));
      }
      loss_sum += br.loss;
      ++batches;

      std::optional<DependencyCoefficient> dep;
      if (k >= 2) {
        try {
          dep = contribution_shares(cache.contributions);
          for (std::size_t i = 0; i < k; ++i) mass[i] += dep->mass[i];
        } catch (const DegenerateContributionError&) {
        }
      }
      const bool needs_shares = std::holds_alternative<Balanced>(strategy);
      const GradientSet modulated =
          needs_shares && !dep ? br.grads
                               : apply_strategy(br.grads, strategy, dep ? &*dep : nullptr,
                                                config.scale_head_partitions);
      sgd_step(params, velocity, modulated, config.learning_rate, config.momentum,
               config.weight_decay);
    }

    if (epoch % config.eval_every != 0 && epoch != config.epochs) continue;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    evaluate_split(params, data.val, rec.val_acc, rec.branch_acc);
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (k >= 2 && total > 0.0) {
      for (double m : mass) rec.shares.push_back(m / total);
    }
    if (k == 2 && mass[1] > 0.0) rec.w_mean = mass[0] / mass[1];
    result.log.records.push_back(std::move(rec));
  }

  std::vector<int> test_pred;
  evaluate_split(params, data.test, result.log.test_acc, result.log.test_branch_acc, &test_pred);
  result.log.test_macro_f1 = macro_f1(test_pred, data.test.labels, data.num_classes());
  return result;
}

Dataset load_dataset(const std::string& source) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), source) != names.end()) return generate(preset(source));
  return read_dataset(source);
}

}  // namespace pdmp
