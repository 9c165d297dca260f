#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mscnn/dataset.hpp"
#include "mscnn/rng.hpp"
#include "mscnn/tensor.hpp"

namespace mscnn::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mscnn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename Scalar>
Tensor<Scalar> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<Scalar> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(rng.uniform(lo, hi));
  return t;
}

// Small slice with a rectangular tumor; intensities random.
inline SliceRecord toy_slice(const std::string& id, Index h, Index w, int label, int fold, Rng& rng) {
  SliceRecord r;
  r.id = id;
  r.pid = "P" + id;
  r.label = label;
  r.fold = fold;
  r.image = Raster(h, w);
  for (Index i = 0; i < r.image.size(); ++i) r.image.data()[i] = static_cast<float>(rng.uniform(0.0, 100.0));
  r.mask = MaskRaster::Zero(h, w);
  r.mask.block(h / 4, w / 4, h / 2, w / 2).setOnes();
  return r;
}

}  // namespace mscnn::test

namespace mscnn::test {

// 3064 small records with the clinical class counts (708/1426/930) and
// fold sizes 612/613/613/613/613.
inline std::vector<SliceRecord> real_shaped_records(Index side) {
  std::vector<SliceRecord> out;
  out.reserve(3064);
  Rng rng(3064);
  for (int i = 0; i < 3064; ++i) {
    const int label = i < 708 ? 1 : i < 708 + 1426 ? 2 : 3;
    out.push_back(toy_slice("s" + std::to_string(i), side, side, label, (i + 1) % 5, rng));
  }
  return out;
}

}  // namespace mscnn::test
