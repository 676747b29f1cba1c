#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "pdmp/errors.hpp"
#include "pdmp/experiments.hpp"
#include "pdmp/io.hpp"
#include "pdmp/trainer.hpp"

using namespace pdmp;

namespace {

Dataset small_data() {
  DatasetSpec s;
  s.num_classes = 3;
  s.modalities = {ModalitySpec{5, 3.0, 1.5, 0}, ModalitySpec{4, 2.0, 0.4, 1}};
  s.n_train = 96;
  s.n_val = 30;
  s.n_test = 60;
  s.seed = 4;
  return generate(s);
}

TrainConfig small_config(int epochs = 3) {
  TrainConfig c;
  c.encoder_widths = {12, 6};
  c.epochs = epochs;
  c.batch_size = 16;
  c.seed = 1;
  return c;
}

std::string metrics_text(const MetricsLog& log, std::size_t k) {
  std::ostringstream out;
  write_metrics_csv(out, log, k);
  return out.str();
}

}  // namespace

TEST_CASE("training records one row per evaluated epoch") {
  const Dataset d = small_data();
  TrainConfig c = small_config(5);
  const TrainResult r = train(c, d);
  CHECK(r.log.records.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) CHECK(r.log.records[e].epoch == static_cast<int>(e + 1));
  CHECK(r.log.records.back().branch_acc.size() == 2);
  CHECK(r.log.records.back().shares.size() == 2);
  CHECK(r.log.records.back().w_mean.has_value());
  CHECK(r.log.test_branch_acc.size() == 2);
  c.eval_every = 2;
  const TrainResult sparse = train(c, d);
  CHECK(sparse.log.records.size() == 3);  // epochs 2, 4 and the final one
  CHECK(sparse.log.records.back().epoch == 5);
  CHECK(flatten(sparse.params) == flatten(r.params));
}

TEST_CASE("training is deterministic per seed") {
  const Dataset d = small_data();
  TrainConfig c = small_config();
  c.strategy = Balanced{1.0};
  const TrainResult a = train(c, d), b = train(c, d);
  CHECK(metrics_text(a.log, 2) == metrics_text(b.log, 2));
  CHECK(flatten(a.params) == flatten(b.params));
  c.seed = 2;
  CHECK(flatten(train(c, d).params) != flatten(a.params));
}

TEST_CASE("pdmp needs a profile with matching modalities") {
  const Dataset d = small_data();
  TrainConfig c = small_config(1);
  c.strategy = Pdmp{4.0, {}};
  CHECK_THROWS_AS(train(c, d), ConfigError);
  const ModalityProfile three = fixed_profile(3, 1, 0);
  CHECK_THROWS_AS(train(c, d, &three), ConfigError);
  const ModalityProfile ok = fixed_profile(2, 1, 0);
  CHECK_NOTHROW(train(c, d, &ok));
  c.strategy = Pdmp{0.5, {}};
  CHECK_THROWS_AS(train(c, d, &ok), ConfigError);
}

TEST_CASE("pdmp at gamma 1 reproduces vanilla bitwise") {
  const Dataset d = small_data();
  TrainConfig c = small_config(10);
  const TrainResult vanilla = train(c, d);
  const ModalityProfile profile = fixed_profile(2, 1, 0);
  c.strategy = Pdmp{1.0, {}};
  const TrainResult pdmp = train(c, d, &profile);
  CHECK(flatten(pdmp.params) == flatten(vanilla.params));
  CHECK(pdmp.log == vanilla.log);
}

TEST_CASE("naive lr scaling equals a larger step only without momentum and decay") {
  const Dataset d = small_data();
  TrainConfig c = small_config(4);
  c.momentum = 0.0;
  c.weight_decay = 0.0;
  c.strategy = NaiveLrScale{4.0};
  const TrainResult scaled = train(c, d);
  TrainConfig big = c;
  big.strategy = Vanilla{};
  big.learning_rate = 4.0 * c.learning_rate;
  CHECK(flatten(train(big, d).params) == flatten(scaled.params));

  c.momentum = 0.9;
  c.weight_decay = 1e-2;
  big.momentum = 0.9;
  big.weight_decay = 1e-2;
  CHECK(flatten(train(big, d).params) != flatten(train(c, d).params));
}

TEST_CASE("logged w is the pooled ratio over the epoch's batches") {
  const Dataset d = small_data();
  const TrainConfig c = small_config(2);
  std::vector<double> num(3, 0.0), den(3, 0.0);
  const StepObserver audit = [&](const StepEvent& ev) {
    const ForwardCache cache = forward(ev.params, ev.batch);
    for (double v : cache.contributions[0].values()) num[static_cast<std::size_t>(ev.epoch)] += std::fabs(v);
    for (double v : cache.contributions[1].values()) den[static_cast<std::size_t>(ev.epoch)] += std::fabs(v);
  };
  const TrainResult r = train(c, d, nullptr, audit);
  for (std::size_t e = 1; e <= 2; ++e) {
    const double expected = num[e] / den[e];
    REQUIRE(r.log.records[e - 1].w_mean.has_value());
    CHECK(*r.log.records[e - 1].w_mean == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.log.records[e - 1].shares[0] == doctest::Approx(num[e] / (num[e] + den[e])).epsilon(1e-12));
  }
}

TEST_CASE("macro F1 convention") {
  const std::vector<int> y = {0, 0, 1, 1, 2, 2};
  CHECK(macro_f1(y, y, 3) == 1.0);
  // Class 2 is never predicted nor present in the second case.
  const std::vector<int> p = {0, 1, 1, 1};
  const std::vector<int> t = {0, 0, 1, 1};
  // F1_0 = 2/3, F1_1 = 4/5, F1_2 = 0 by convention.
  CHECK(macro_f1(p, t, 3) == doctest::Approx((2.0 / 3.0 + 0.8) / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(macro_f1(p, y, 3), DimensionError);
}

TEST_CASE("sgd step follows the momentum and decay formula") {
  Parameters theta;
  theta.head.bias = Matrix::from_rows({{1.0}, {-2.0}});
  Parameters v = zeros_like(theta);
  v.head.bias = Matrix::from_rows({{0.5}, {0.25}});
  Parameters g = zeros_like(theta);
  g.head.bias = Matrix::from_rows({{0.1}, {-0.3}});
  sgd_step(theta, v, g, 0.1, 0.9, 0.01);
  // v = 0.9 * v + g + 0.01 * theta; theta -= 0.1 * v
  const double v0 = 0.9 * 0.5 + 0.1 + 0.01 * 1.0, v1 = 0.9 * 0.25 - 0.3 + 0.01 * -2.0;
  CHECK(v.head.bias(0, 0) == v0);
  CHECK(v.head.bias(1, 0) == v1);
  CHECK(theta.head.bias(0, 0) == 1.0 - 0.1 * v0);
  CHECK(theta.head.bias(1, 0) == -2.0 - 0.1 * v1);
  Parameters bad = zeros_like(theta);
  bad.head.bias = Matrix(3, 1);
  CHECK_THROWS_AS(sgd_step(theta, v, bad, 0.1, 0.9, 0.0), DimensionError);
}

TEST_CASE("a huge learning rate diverges") {
  TrainConfig c = small_config(20);
  c.learning_rate = 1e6;
  CHECK_THROWS_AS(train(c, small_data()), DivergenceError);
}

TEST_CASE("config validation") {
  TrainConfig c = small_config();
  CHECK_NOTHROW(validate(c));
  c.epochs = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small_config();
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small_config();
  c.momentum = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small_config();
  c.batch_size = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small_config();
  c.strategy = Balanced{-1.0};
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("sweep and comparison tables") {
  const Dataset d = small_data();
  const TrainConfig c = small_config(2);
  const ModalityProfile profile = fixed_profile(2, 1, 0);
  const std::vector<std::uint64_t> seeds = {0, 1, 2};
  const std::vector<double> gammas = {1.0, 2.0, 4.0};
  const ExperimentTable sweep = sweep_gamma(c, d, profile, gammas, seeds);
  REQUIRE(sweep.rows.size() == 3);
  CHECK(sweep.runs.size() == 9);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sweep.rows[i].gamma_p == gammas[i]);
    CHECK(sweep.rows[i].runs == 3);
    CHECK(sweep.runs[3 * i + 2].seed == 2);
  }
  const double best = best_gamma(sweep);
  for (const auto& r : sweep.rows) CHECK(r.mean_acc <= sweep.rows[static_cast<std::size_t>(std::log2(best))].mean_acc);

  // Each run matches an independent single training run.
  TrainConfig one = c;
  one.seed = 1;
  one.strategy = Pdmp{2.0, {}};
  CHECK(sweep.runs[4].log == train(one, d, &profile).log);

  const std::vector<double> single = {2.0};
  CHECK(sweep_gamma(c, d, profile, single, seeds).rows.size() == 1);
  const std::vector<double> bad = {0.5};
  CHECK_THROWS_AS(sweep_gamma(c, d, profile, bad, seeds), InputError);

  const std::vector<Strategy> twins = {Vanilla{}, Vanilla{}};
  const ExperimentTable cmp = compare_strategies(c, d, nullptr, twins, seeds);
  REQUIRE(cmp.rows.size() == 2);
  CHECK(cmp.rows[0].mean_acc == cmp.rows[1].mean_acc);
  CHECK(cmp.rows[0].std_acc == cmp.rows[1].std_acc);
  const std::vector<Strategy> lone = {Vanilla{}};
  CHECK_THROWS_AS(compare_strategies(c, d, nullptr, lone, seeds), InputError);
  const std::vector<std::uint64_t> two_seeds = {0, 1};
  CHECK_THROWS_AS(compare_strategies(c, d, nullptr, twins, two_seeds), InputError);
}

TEST_CASE("diverged runs score chance") {
  const Dataset d = small_data();
  TrainConfig c = small_config(20);
  c.learning_rate = 1e6;
  const std::vector<Strategy> s = {Vanilla{}, NaiveLrScale{2.0}};
  const std::vector<std::uint64_t> seeds = {0, 1, 2};
  const ExperimentTable t = compare_strategies(c, d, nullptr, s, seeds);
  for (const auto& r : t.runs) {
    CHECK(r.diverged);
    CHECK(r.log.test_acc == doctest::Approx(1.0 / 3.0));
    CHECK(r.log.test_macro_f1 == 0.0);
  }
  CHECK(t.rows[0].diverged == 3);
}

TEST_CASE("best gamma prefers the smaller value on ties") {
  ExperimentTable t;
  t.rows = {Aggregate{"a", 4.0, 0.7}, Aggregate{"b", 2.0, 0.7}, Aggregate{"c", 8.0, 0.6}};
  CHECK(best_gamma(t) == 2.0);
  t.rows[2].mean_acc = 0.71;
  CHECK(best_gamma(t) == 8.0);
  CHECK_THROWS_AS(best_gamma(ExperimentTable{}), InputError);
}

TEST_CASE("aggregate uses the sample standard deviation") {
  std::vector<RunOutcome> runs(3);
  const double acc[] = {0.5, 0.7, 0.9};
  for (std::size_t i = 0; i < 3; ++i) runs[i].log.test_acc = acc[i];
  const Aggregate a = aggregate(runs);
  CHECK(a.mean_acc == doctest::Approx(0.7));
  CHECK(a.std_acc == doctest::Approx(0.2));
  CHECK(a.runs == 3);
}
