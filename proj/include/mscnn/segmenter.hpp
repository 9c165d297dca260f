#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mscnn/dataset.hpp"
#include "mscnn/label_map.hpp"
#include "mscnn/metrics.hpp"
#include "mscnn/network.hpp"

namespace mscnn {

struct SegmentOptions {
  /// Grid step between evaluated centers; each label fills its stride x stride cell.
  Index stride = 1;
  /// Windows per forward pass; affects speed only.
  Index batch = 256;
  /// Recorded in the label map provenance.
  std::string checkpoint;
};

/// Dense sliding-window labeling. Each evaluated center gets the argmax of
/// the four class probabilities (ties to the lower label). Throws StateError
/// when the network carries no standardization stats.
template <typename Scalar>
LabelMap segment_slice(const MultiscaleNet<Scalar>& net, const SliceRecord& slice, const SegmentOptions& options);

/// Segments and scores each record; optionally writes label maps (and PNG
/// overlays) into `label_dir`.
template <typename Scalar>
EvalReport segment_and_evaluate(const MultiscaleNet<Scalar>& net, const std::vector<SliceRecord>& records,
                                const SegmentOptions& options, double tau,
                                const std::optional<std::filesystem::path>& label_dir = std::nullopt,
                                bool overlays = false);

}  // namespace mscnn
