#pragma once

#include <filesystem>
#include <string>

#include "mscnn/dataset.hpp"

namespace mscnn {

/// Per-pixel predictions: 0 healthy, 1 meningioma, 2 glioma, 3 pituitary.
struct LabelMap {
  MaskRaster labels;
  std::string slice_id;
  std::string checkpoint;
  Eigen::Index stride = 1;

  Eigen::Index height() const { return labels.rows(); }
  Eigen::Index width() const { return labels.cols(); }

  friend bool operator==(const LabelMap& a, const LabelMap& b) {
    return a.slice_id == b.slice_id && a.checkpoint == b.checkpoint && a.stride == b.stride &&
           a.labels.rows() == b.labels.rows() && a.labels.cols() == b.labels.cols() && (a.labels == b.labels).all();
  }
};

/// Writes `<stem>.labels` (one byte per pixel, row-major) and `<stem>.json`
/// with {width, height, slice_id, checkpoint, stride}.
void write_label_map(const LabelMap& map, const std::filesystem::path& stem);

/// Reads the pair written by write_label_map; `stem` may name either file or
/// the common prefix.
LabelMap read_label_map(const std::filesystem::path& stem);

/// RGB overlay: prediction red, ground truth green, intersection yellow,
/// over the grey image.
void write_overlay_png(const Raster& image, const MaskRaster& predicted_tumor, const MaskRaster& truth,
                       const std::filesystem::path& path);

}  // namespace mscnn
