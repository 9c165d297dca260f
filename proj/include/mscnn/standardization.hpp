#pragma once

namespace mscnn {

/// Global pixel statistics of the training windows.
struct StandardizationStats {
  double mean = 0.0;
  double std = 1.0;

  double apply(double x) const { return (x - mean) / std; }

  friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

}  // namespace mscnn
