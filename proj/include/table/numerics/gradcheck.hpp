#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "table/numerics/tensor.hpp"

namespace table::numerics {

struct GradcheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so coordinates whose true
  /// gradient is ~0 are judged on absolute error instead.
  double floor = 1e-6;
  /// Coordinates sampled per parameter tensor; 0 checks every coordinate.
  std::size_t samples_per_tensor = 24;
  std::uint64_t seed = 1;
};

struct GradcheckFailure {
  std::size_t tensor_index = 0;
  std::size_t coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradcheckReport {
  bool passed = true;
  std::size_t checked = 0;
  /// Coordinate with the largest relative error (the failure, if any).
  GradcheckFailure worst;

  std::string describe() const;
};

/// Compares tape gradients of `loss` against central differences
/// (f(θ+h) − f(θ−h)) / 2h on sampled coordinates of `params`. `loss` must be
/// deterministic and build its graph from `params` on every call.
GradcheckReport gradcheck(const std::function<Tensor<double>()>& loss,
                          std::vector<Tensor<double>> params, const GradcheckOptions& options = {});

}  // namespace table::numerics
