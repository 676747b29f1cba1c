#pragma once

#include <functional>
#include <span>
#include <vector>

namespace pdmp {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient estimate,
/// (f(p + eps e_k) - f(p - eps e_k)) / (2 eps) per coordinate.
/// Throws InputError for eps <= 0 and NumericError if f returns NaN/Inf.
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> params,
                                     double eps = 1e-5);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-8);

/// Largest relative_error over paired entries.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

}  // namespace pdmp
