#include <cmath>
#include <vector>

#include "doctest.h"
#include "pdmp/analyze.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/kernels.hpp"

using namespace pdmp;

namespace {

DatasetSpec small_spec(double sigma_a, double sigma_b) {
  DatasetSpec s;
  s.num_classes = 4;
  s.modalities = {ModalitySpec{6, 3.0, sigma_a, 0}, ModalitySpec{6, 3.0, sigma_b, 0}};
  s.n_train = 160;
  s.n_val = 80;
  s.n_test = 80;
  s.seed = 11;
  return s;
}

AnalysisConfig small_config(int epochs) {
  AnalysisConfig c;
  c.train.encoder_widths = {16, 8};
  c.train.epochs = epochs;
  c.train.batch_size = 16;
  c.train.seed = 2;
  return c;
}

// Independent plug-in MI straight from the definition.
double brute_mi(const std::vector<int>& x, const std::vector<int>& y, int m) {
  const double n = static_cast<double>(x.size());
  double bits = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      double pab = 0, pa = 0, pb = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        pab += (x[i] == a && y[i] == b) ? 1 : 0;
        pa += x[i] == a ? 1 : 0;
        pb += y[i] == b ? 1 : 0;
      }
      if (pab > 0) bits += pab / n * std::log2((pab / n) / ((pa / n) * (pb / n)));
    }
  }
  return bits;
}

}  // namespace

TEST_CASE("stratified subset keeps classes balanced and order intact") {
  const Dataset d = generate(small_spec(0.5, 1.0));
  const Split s = stratified_subset(d.train, 4, 0.25, Rng(1));
  CHECK(s.size() == 40);
  std::vector<int> counts(4, 0);
  for (int y : s.labels) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) CHECK(c == 10);
  // Rows keep their original relative order.
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (cursor < d.train.size() && d.train.features[0].row(cursor)[0] != s.features[0].row(i)[0]) ++cursor;
    CHECK(cursor < d.train.size());
  }
  CHECK(stratified_subset(d.train, 4, 1.0, Rng(1)).labels == d.train.labels);
  CHECK(stratified_subset(d.train, 4, 0.25, Rng(1)).features == s.features);
  CHECK_THROWS_AS(stratified_subset(d.train, 4, 0.0, Rng(1)), InputError);
  CHECK_THROWS_AS(stratified_subset(d.train, 4, 1.5, Rng(1)), InputError);
  CHECK_THROWS_AS(stratified_subset(d.train, 4, 0.01, Rng(1)), InputError);
}

TEST_CASE("mutual information examples") {
  std::vector<int> y;
  for (int i = 0; i < 800; ++i) y.push_back(i % 8);
  CHECK(estimate_mi(y, y, 8).bits == doctest::Approx(3.0).epsilon(1e-12));
  const std::vector<int> constant(800, 3);
  CHECK(estimate_mi(constant, y, 8).bits == 0.0);
  std::vector<int> y6;
  for (int i = 0; i < 600; ++i) y6.push_back(i % 6);
  CHECK(estimate_mi(y6, y6, 6).bits == std::log2(6.0));
  CHECK(estimate_mi(std::vector<int>(600, 5), y6, 6).bits == 0.0);

  // Joint counts [[2,1],[1,2]].
  const std::vector<int> pred = {0, 0, 0, 1, 1, 1}, truth = {0, 0, 1, 0, 1, 1};
  const MIEstimate e = estimate_mi(pred, truth, 2);
  CHECK(e.joint_counts(0, 0) == 2);
  CHECK(e.joint_counts(0, 1) == 1);
  CHECK(e.joint_counts(1, 0) == 1);
  CHECK(e.joint_counts(1, 1) == 2);
  const double expected = 2 * (1.0 / 3) * std::log2(4.0 / 3) + 2 * (1.0 / 6) * std::log2(2.0 / 3);
  CHECK(e.bits == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(e.bits - 0.0817) < 1e-4);

  CHECK_THROWS_AS(estimate_mi(std::vector<int>{}, std::vector<int>{}, 2), InputError);
  CHECK_THROWS_AS(estimate_mi(pred, std::vector<int>{0}, 2), InputError);
  CHECK_THROWS_AS(estimate_mi(std::vector<int>{2}, std::vector<int>{0}, 2), InputError);
}

TEST_CASE("mutual information invariants") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(6));
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
      x[i] = rng.uniform() < 0.6 ? y[i] : static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    }
    const MIEstimate e = estimate_mi(x, y, m);
    CHECK(e.bits >= 0.0);
    CHECK(e.bits <= std::log2(static_cast<double>(m)) + 1e-12);
    CHECK(std::abs(e.bits - brute_mi(x, y, m)) < 1e-10);
    double total = 0.0;
    for (double c : e.joint_counts.values()) total += c;
    CHECK(total == static_cast<double>(n));
    // Relabelling predictions by a permutation leaves MI unchanged.
    std::vector<int> perm(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(std::span<int>(perm));
    std::vector<int> px(n);
    for (std::size_t i = 0; i < n; ++i) px[i] = perm[static_cast<std::size_t>(x[i])];
    CHECK(std::abs(estimate_mi(px, y, m).bits - e.bits) < 1e-12);
  }
}

TEST_CASE("MI report has one entry per branch plus the fused prediction") {
  const Dataset d = generate(small_spec(0.5, 1.0));
  ModelConfig mc{{6, 6}, {16, 8}, 4, FusionKind::concat};
  const Parameters p = init_model(mc, Rng(3));
  const auto report = mi_dominance_report(p, d.test);
  REQUIRE(report.size() == 3);
  const ForwardCache cache = forward(p, whole_split(d.test));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(report[i].bits == estimate_mi(argmax_rows(cache.contributions[i]), d.test.labels, 4).bits);
  }
  CHECK(report[2].bits == estimate_mi(predict(p, d.test), d.test.labels, 4).bits);
  for (const auto& e : report) CHECK(e.bits <= 2.0 + 1e-12);
}

TEST_CASE("analysis is deterministic and recovers an unambiguous ranking") {
  const Dataset d = generate(small_spec(2.5, 0.4));
  AnalysisConfig c = small_config(8);
  const AnalysisResult a = run_modality_analysis(d, c);
  const AnalysisResult b = run_modality_analysis(d, c);
  CHECK(a.profile == b.profile);
  CHECK(a.profile.performance_dominant == 1);
  CHECK(a.profile.optimization_dominant == 1);
  CHECK(a.unimodal_curves.size() == 2);
  CHECK(a.unimodal_curves[0].size() == 8);
  CHECK(a.early_epoch == 1);
  CHECK(a.profile.unimodal_early_acc.size() == 2);
  CHECK(a.profile.multimodal_branch_acc.size() == 2);

  c.method = DominanceMethod::early_unimodal;
  const AnalysisResult e = run_modality_analysis(d, c);
  CHECK(e.profile.method_used == DominanceMethod::early_unimodal);
  CHECK(e.profile.optimization_dominant == argmax_first(e.profile.unimodal_early_acc));
}

TEST_CASE("profile indices follow the recorded rankings") {
  DatasetSpec s = small_spec(0.8, 0.8);
  s.modalities[1] = s.modalities[0];
  const AnalysisResult a = run_modality_analysis(generate(s), small_config(4));
  CHECK(a.profile.performance_dominant == argmax_first(a.profile.unimodal_final_acc));
  CHECK(a.profile.optimization_dominant == argmax_first(a.profile.multimodal_branch_acc));
}

TEST_CASE("subset analysis keeps the update budget") {
  const Dataset d = generate(small_spec(2.5, 0.4));
  AnalysisConfig c = small_config(4);
  c.subset_fraction = 0.5;
  c.early_epoch = 2;
  const AnalysisResult a = run_modality_analysis(d, c);
  // 160 rows at batch 16 is 10 steps per epoch; 80 rows is 5.
  CHECK(a.unimodal_curves[0].size() == 8);
  CHECK(a.early_epoch == 4);
  CHECK(a.profile.subset_fraction == 0.5);

  c.early_epoch = 4;
  CHECK_THROWS_AS(run_modality_analysis(d, c), InputError);
  c.early_epoch = -1;
  CHECK_THROWS_AS(run_modality_analysis(d, c), InputError);
  c = small_config(0);
  CHECK_THROWS_AS(run_modality_analysis(d, c), InputError);
}
