#pragma once

#include <functional>
#include <string>

#include "mscnn/network.hpp"

namespace mscnn {

/// Absolute gradients below this are compared absolutely rather than relatively.
inline constexpr double kGradCheckFloor = 1e-6;

/// |a - n| / max(|a|, |n|, kGradCheckFloor).
double relative_error(double analytic, double numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  Index checked = 0;
  /// Coordinates whose +-eps probes changed the piecewise-linear region.
  Index skipped = 0;
  std::string worst;

  void merge(const GradCheckResult& other);
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates probed per tensor; 0 probes every coordinate.
  Index samples_per_tensor = 24;
  std::uint64_t seed = 1;
};

/// Central-difference check of `analytic` against `loss` for coordinates of
/// `values`. `region` (optional) returns a signature of the active linear
/// region; probes whose signature differs from the base are skipped.
GradCheckResult check_coordinates(const std::string& name, Tensor<double>& values, const Tensor<double>& analytic,
                                  const std::function<double()>& loss, const GradCheckOptions& options,
                                  const std::function<std::uint64_t()>& region = {});

/// Checks every parameter tensor and the input of a double-precision network
/// under eval-mode softmax cross-entropy.
GradCheckResult check_network_gradients(MultiscaleNet<double>& net, Tensor<double> windows,
                                        const std::vector<int>& labels, const GradCheckOptions& options);

}  // namespace mscnn
