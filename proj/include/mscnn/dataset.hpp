#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mscnn {

using Raster = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskRaster = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class View { sagittal, coronal, axial };

std::string to_string(View view);
View view_from_string(const std::string& s);

inline constexpr int kNumFolds = 5;

/// One slice with its binary tumor mask and ground-truth tumor type
/// (1 meningioma, 2 glioma, 3 pituitary).
struct SliceRecord {
  std::string id;
  std::string pid;
  int label = 1;
  View view = View::axial;
  int fold = 0;
  Raster image;
  MaskRaster mask;

  Eigen::Index height() const { return image.rows(); }
  Eigen::Index width() const { return image.cols(); }
  Eigen::Index tumor_pixels() const;

  /// Throws RecordError / MaskError when an invariant is violated.
  void validate() const;
};

/// Reads `manifest.json` (or the manifest inside a directory). Raster paths
/// are resolved relative to the manifest.
std::vector<SliceRecord> load_dataset(const std::filesystem::path& manifest_or_dir);

/// Writes `<dir>/manifest.json` plus `<id>.f32` / `<id>.mask` rasters.
void save_dataset(const std::vector<SliceRecord>& records, const std::filesystem::path& dir);

struct FoldSplit {
  std::vector<SliceRecord> train;
  std::vector<SliceRecord> test;
};

/// test = records with fold == k, train = the rest (order preserved).
FoldSplit fold_split(const std::vector<SliceRecord>& records, int k);

/// Raw little-endian raster I/O.
Raster read_f32_raster(const std::filesystem::path& path, Eigen::Index height, Eigen::Index width);
void write_f32_raster(const Raster& raster, const std::filesystem::path& path);
MaskRaster read_u8_raster(const std::filesystem::path& path, Eigen::Index height, Eigen::Index width);
void write_u8_raster(const MaskRaster& raster, const std::filesystem::path& path);

}  // namespace mscnn
