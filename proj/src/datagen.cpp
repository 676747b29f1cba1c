#include "pdmp/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/errors.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {
namespace {

// Warp layer weights are N(0, kWarpGain^2 / dim); biases N(0, kWarpBiasStd^2).
constexpr double kWarpGain = 0.5;
constexpr double kWarpBiasStd = 0.3;

// Geometry key. Leaves out class_sep and noise_sigma so that changing either
// one rescales the same class layout instead of drawing a new one.
std::string geometry_tag(const ModalitySpec& s) {
  return "dim=" + std::to_string(s.dim) + ";warp=" + std::to_string(s.warp_depth);
}

void validate_modality(const ModalitySpec& m, std::size_t index) {
  const std::string where = "modality " + std::to_string(index) + ": ";
  if (m.dim < 1) throw InputError(where + "dim must be >= 1");
  if (!(m.class_sep > 0.0)) throw InputError(where + "class_sep must be > 0");
  if (!(m.noise_sigma > 0.0)) throw InputError(where + "noise_sigma must be > 0");
  if (m.warp_depth < 0) throw InputError(where + "warp_depth must be >= 0");
}

Split generate_split(const DatasetSpec& spec, const std::vector<ModalityGenerator>& gens,
                     std::size_t n, std::string_view name) {
  Split split;
  split.labels = balanced_labels(n, spec.num_classes, spec.seed, std::string("labels:") += name);
  for (std::size_t m = 0; m < gens.size(); ++m) {
    split.features.push_back(gens[m].sample(split.labels, std::string(name) + "/" + std::to_string(m)));
  }
  return split;
}

}  // namespace

Split Split::select_modality(std::size_t m) const {
  if (m >= features.size()) throw InputError("modality index out of range");
  return Split{{features[m]}, labels};
}

Split Split::select_rows(std::span<const std::size_t> rows) const {
  Split out;
  for (const auto& f : features) out.features.push_back(gather_rows(f, rows));
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  return out;
}

Dataset Dataset::select_modality(std::size_t m) const {
  Dataset out;
  out.spec = spec;
  out.spec.modalities = {spec.modalities.at(m)};
  out.train = train.select_modality(m);
  out.val = val.select_modality(m);
  out.test = test.select_modality(m);
  return out;
}

void validate(const DatasetSpec& spec) {
  if (spec.num_classes < 2) throw InputError("num_classes must be >= 2");
  if (spec.modalities.size() < 2) throw InputError("need at least 2 modalities");
  const auto m = static_cast<std::size_t>(spec.num_classes);
  if (spec.n_train < m) throw InputError("n_train must be >= num_classes");
  if (spec.n_val < m) throw InputError("n_val must be >= num_classes");
  if (spec.n_test < m) throw InputError("n_test must be >= num_classes");
  for (std::size_t i = 0; i < spec.modalities.size(); ++i) validate_modality(spec.modalities[i], i);
}

std::vector<int> balanced_labels(std::size_t n, int num_classes, std::uint64_t seed,
                                 std::string_view stream) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % num_classes);
  Rng rng = Rng(seed).derive(stream);
  rng.shuffle(std::span<int>(labels));
  return labels;
}

ModalityGenerator::ModalityGenerator(const ModalitySpec& spec, int num_classes,
                                     std::uint64_t dataset_seed)
    : spec_(spec), seed_(Rng(dataset_seed).derive(geometry_tag(spec)).seed()) {
  const auto classes = static_cast<std::size_t>(num_classes);
  const std::size_t d = spec.dim;
  Rng mean_rng = Rng(seed_).derive("means");
  means_ = Matrix(classes, d);
  for (std::size_t c = 0; c < classes; ++c) {
    auto row = means_.row(c);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : row) {
        v = mean_rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    for (double& v : row) v *= spec.class_sep / norm;
  }

  Rng warp_rng = Rng(seed_).derive("warp");
  const double w_std = kWarpGain / std::sqrt(static_cast<double>(d));
  for (int l = 0; l < spec.warp_depth; ++l) {
    Matrix a(d, d);
    Matrix c(d, 1);
    for (double& v : a.values()) v = w_std * warp_rng.normal();
    for (double& v : c.values()) v = kWarpBiasStd * warp_rng.normal();
    warp_weights_.push_back(std::move(a));
    warp_biases_.push_back(std::move(c));
  }

  warped_means_ = Matrix(classes, d);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto w = warp(means_.row(c));
    std::copy(w.begin(), w.end(), warped_means_.row(c).begin());
  }
}

std::vector<double> ModalityGenerator::warp(std::span<const double> x) const {
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t l = 0; l < warp_weights_.size(); ++l) {
    const Matrix& a = warp_weights_[l];
    std::vector<double> next(h.size());
    for (std::size_t j = 0; j < a.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(j, k) * h[k];
      next[j] = std::tanh(acc + warp_biases_[l](j, 0));
    }
    h = std::move(next);
  }
  return h;
}

Matrix ModalityGenerator::sample(std::span<const int> labels, std::string_view stream) const {
  Rng rng = Rng(seed_).derive(stream);
  Matrix x(labels.size(), spec_.dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto mean = warped_means_.row(static_cast<std::size_t>(labels[i]));
    auto row = x.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = mean[k] + spec_.noise_sigma * rng.normal();
  }
  return x;
}

Dataset generate(const DatasetSpec& spec) {
  validate(spec);
  std::vector<ModalityGenerator> gens;
  for (const auto& m : spec.modalities) gens.emplace_back(m, spec.num_classes, spec.seed);
  Dataset ds;
  ds.spec = spec;
  ds.train = generate_split(spec, gens, spec.n_train, "train");
  ds.val = generate_split(spec, gens, spec.n_val, "val");
  ds.test = generate_split(spec, gens, spec.n_test, "test");
  return ds;
}

BayesRanking bayes_ranking(const DatasetSpec& spec, std::size_t n_mc) {
  validate(spec);
  const auto classes = static_cast<std::size_t>(spec.num_classes);
  if (n_mc < 10 * classes) throw InputError("bayes_ranking: n_mc must be >= 10 * num_classes");
  BayesRanking out;
  for (const auto& m : spec.modalities) {
    const ModalityGenerator gen(m, spec.num_classes, spec.seed);
    const auto labels = balanced_labels(n_mc, spec.num_classes, gen.seed(), "bayes-labels");
    const Matrix x = gen.sample(labels, "bayes-mc");
    const Matrix& centers = gen.warped_means();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      const auto xi = x.row(i);
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t c = 0; c < classes; ++c) {
        const auto mc = centers.row(c);
        double d2 = 0.0;
        for (std::size_t k = 0; k < xi.size(); ++k) d2 += (xi[k] - mc[k]) * (xi[k] - mc[k]);
        if (d2 < best_d) {
          best_d = d2;
          best = c;
        }
      }
      if (static_cast<int>(best) == labels[i]) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(n_mc);
    out.accuracy.push_back(acc);
    out.std_error.push_back(std::sqrt(acc * (1.0 - acc) / static_cast<double>(n_mc)));
  }
  out.order.resize(out.accuracy.size());
  for (std::size_t i = 0; i < out.order.size(); ++i) out.order[i] = i;
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return out.accuracy[a] > out.accuracy[b]; });
  return out;
}

std::vector<std::string> preset_names() { return {"cremad-like", "ave-like", "cefa-like"}; }

DatasetSpec preset(std::string_view name) {
  DatasetSpec s;
  s.num_classes = 6;
  s.n_train = 600;
  s.n_val = 600;
  s.n_test = 1200;
  s.seed = 7;
  if (name == "cremad-like") {
    s.modalities = {ModalitySpec{16, 6.0, 4.0, 0}, ModalitySpec{16, 2.0, 0.05, 3}};
  } else if (name == "ave-like") {
    s.modalities = {ModalitySpec{16, 6.0, 2.25, 0}, ModalitySpec{16, 3.5, 0.3, 2}};
  } else if (name == "cefa-like") {
    s.modalities = {ModalitySpec{16, 6.0, 4.0, 0}, ModalitySpec{16, 3.0, 0.5, 2},
                    ModalitySpec{16, 2.0, 0.05, 3}};
  } else {
    throw InputError("unknown preset '" + std::string(name) +
                     "' (expected cremad-like, ave-like or cefa-like)");
  }
  return s;
}

}  // namespace pdmp
