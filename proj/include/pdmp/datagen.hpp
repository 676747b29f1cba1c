#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdmp/matrix.hpp"

namespace pdmp {

struct ModalitySpec {
  std::size_t dim = 1;
  double class_sep = 1.0;
  double noise_sigma = 1.0;
  int warp_depth = 0;

  friend bool operator==(const ModalitySpec&, const ModalitySpec&) = default;
};

struct DatasetSpec {
  int num_classes = 2;
  std::vector<ModalitySpec> modalities;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;

  std::size_t num_modalities() const noexcept { return modalities.size(); }
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

/// One split stored column-wise: features[m] is N x dim_m for modality m,
/// labels[i] is the class of row i in every features[m].
struct Split {
  std::vector<Matrix> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_modalities() const noexcept { return features.size(); }
  /// The same rows restricted to one modality.
  Split select_modality(std::size_t m) const;
  Split select_rows(std::span<const std::size_t> rows) const;
};

struct Dataset {
  DatasetSpec spec;
  Split train;
  Split val;
  Split test;

  std::size_t num_modalities() const noexcept { return train.num_modalities(); }
  int num_classes() const noexcept { return spec.num_classes; }
  /// Single-modality view of every split; spec keeps only that modality.
  Dataset select_modality(std::size_t m) const;
};

/// Throws InputError naming the violated bound.
void validate(const DatasetSpec& spec);

/// Class means and warp for one modality. The class layout depends on the
/// dataset seed, dim and warp_depth only: class_sep scales it and noise_sigma
/// scales the noise, so either knob can be varied with everything else held
/// fixed. Noise streams are named by the caller; generate() uses one stream
/// per split and modality index.
class ModalityGenerator {
 public:
  ModalityGenerator(const ModalitySpec& spec, int num_classes, std::uint64_t dataset_seed);

  const ModalitySpec& spec() const noexcept { return spec_; }
  /// warp(mean_y) for every class: the noise-free signal, M x dim.
  const Matrix& warped_means() const noexcept { return warped_means_; }
  const Matrix& class_means() const noexcept { return means_; }
  /// Rows warp(mean_{labels[i]}) + N(0, sigma^2 I), drawn from `stream`.
  Matrix sample(std::span<const int> labels, std::string_view stream) const;
  /// Fixed tanh-affine warp: h <- tanh(A h + c), warp_depth times.
  std::vector<double> warp(std::span<const double> x) const;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  ModalitySpec spec_;
  std::uint64_t seed_;
  Matrix means_;
  std::vector<Matrix> warp_weights_;
  std::vector<Matrix> warp_biases_;
  Matrix warped_means_;
};

Dataset generate(const DatasetSpec& spec);

struct BayesRanking {
  std::vector<double> accuracy;   // per modality
  std::vector<double> std_error;  // binomial MC standard error
  std::vector<std::size_t> order; // best first; ties go to the lower index
};

/// Monte-Carlo estimate of each modality's Bayes accuracy. Classes are
/// equiprobable and the class-conditionals are isotropic Gaussians around the
/// warped means, so the Bayes rule is nearest warped mean. Requires
/// n_mc >= 10 * M.
BayesRanking bayes_ranking(const DatasetSpec& spec, std::size_t n_mc);

/// Names accepted by `preset`.
std::vector<std::string> preset_names();
/// "cremad-like", "ave-like" or "cefa-like"; InputError otherwise.
DatasetSpec preset(std::string_view name);

/// Balanced labels for n samples: counts per class differ by at most one,
/// order shuffled by `stream`.
std::vector<int> balanced_labels(std::size_t n, int num_classes, std::uint64_t seed,
                                 std::string_view stream);

}  // namespace pdmp
