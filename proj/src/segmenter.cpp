#include "mscnn/segmenter.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "json.hpp"
#include "mscnn/errors.hpp"
#include "mscnn/windows.hpp"

namespace mscnn {
namespace fs = std::filesystem;
using json = nlohmann::json;

template <typename Scalar>
LabelMap segment_slice(const MultiscaleNet<Scalar>& net, const SliceRecord& slice, const SegmentOptions& options) {
  if (!net.stats) throw StateError("network has no standardization statistics; train or load a trained checkpoint");
  if (options.stride < 1) throw ParameterError("stride must be >= 1");
  if (options.batch < 1) throw ParameterError("batch must be >= 1");
  const Index height = slice.height(), width = slice.width();
  const Index side = net.config().window, r = side / 2;

  // Standardize once; out-of-image positions stay 0, i.e. the mean.
  const Raster standardized = standardize(slice.image, *net.stats);

  std::vector<std::pair<Index, Index>> centers;
  for (Index i = 0; i < height; i += options.stride)
    for (Index j = 0; j < width; j += options.stride) centers.emplace_back(i, j);

  LabelMap map;
  map.labels = MaskRaster::Zero(height, width);
  map.slice_id = slice.id;
  map.checkpoint = options.checkpoint;
  map.stride = options.stride;

  const auto total = static_cast<Index>(centers.size());
  for (Index begin = 0; begin < total; begin += options.batch) {
    const Index end = std::min(total, begin + options.batch);
    Tensor<Scalar> windows({end - begin, 1, side, side});
    for (Index n = begin; n < end; ++n) {
      const auto [ci, cj] = centers[static_cast<std::size_t>(n)];
      auto patch = windows.matrix(side, side, (n - begin) * side * side);
      patch.setZero();
      const Index i0 = std::max<Index>(0, ci - r), i1 = std::min<Index>(height, ci + r + 1);
      const Index j0 = std::max<Index>(0, cj - r), j1 = std::min<Index>(width, cj + r + 1);
      patch.block(i0 - (ci - r), j0 - (cj - r), i1 - i0, j1 - j0) =
          standardized.block(i0, j0, i1 - i0, j1 - j0).matrix().template cast<Scalar>();
    }
    const Tensor<Scalar> probs = net.predict(windows).probs;
    for (Index n = begin; n < end; ++n) {
      const Scalar* p = probs.data() + (n - begin) * 4;
      std::uint8_t label = 0;
      for (std::uint8_t l = 1; l < 4; ++l)
        if (p[l] > p[label]) label = l;
      const auto [ci, cj] = centers[static_cast<std::size_t>(n)];
      map.labels.block(ci, cj, std::min(options.stride, height - ci), std::min(options.stride, width - cj)).setConstant(label);
    }
  }
  return map;
}

template <typename Scalar>
EvalReport segment_and_evaluate(const MultiscaleNet<Scalar>& net, const std::vector<SliceRecord>& records,
                                const SegmentOptions& options, double tau, const std::optional<fs::path>& label_dir,
                                bool overlays) {
  if (label_dir) fs::create_directories(*label_dir);
  std::vector<SliceEval> evals;
  evals.reserve(records.size());
  for (const auto& rec : records) {
    const LabelMap map = segment_slice(net, rec, options);
    if (label_dir) {
      write_label_map(map, *label_dir / rec.id);
      if (overlays) write_overlay_png(rec.image, (map.labels > 0).cast<std::uint8_t>(), rec.mask, *label_dir / (rec.id + ".png"));
    }
    evals.push_back(evaluate_slice(rec.id, map.labels, rec.mask, rec.label, tau));
  }
  return make_report(std::move(evals), tau);
}

// ------------------------------------------------------------ label maps

namespace {

fs::path strip_stem(const fs::path& p) {
  if (p.extension() == ".labels" || p.extension() == ".json") return p.parent_path() / p.stem();
  return p;
}

fs::path with_suffix(const fs::path& stem, const char* suffix) {
  fs::path out = stem;
  out += suffix;
  return out;
}

}  // namespace

void write_label_map(const LabelMap& map, const fs::path& stem_in) {
  const fs::path stem = strip_stem(stem_in);
  write_u8_raster(map.labels, with_suffix(stem, ".labels"));
  const json meta = {{"width", map.width()},
                     {"height", map.height()},
                     {"slice_id", map.slice_id},
                     {"checkpoint", map.checkpoint},
                     {"stride", map.stride}};
  std::ofstream out(with_suffix(stem, ".json"));
  if (!out) throw IoError("cannot write label map sidecar for " + stem.string());
  out << meta.dump() << '\n';
}

LabelMap read_label_map(const fs::path& stem_in) {
  const fs::path stem = strip_stem(stem_in);
  std::ifstream in(with_suffix(stem, ".json"));
  if (!in) throw IoError("missing label map sidecar " + with_suffix(stem, ".json").string());
  LabelMap map;
  try {
    const json meta = json::parse(in);
    map.slice_id = meta.at("slice_id").get<std::string>();
    map.checkpoint = meta.at("checkpoint").get<std::string>();
    map.stride = meta.at("stride").get<Index>();
    map.labels = read_u8_raster(with_suffix(stem, ".labels"), meta.at("height").get<Index>(), meta.at("width").get<Index>());
  } catch (const json::exception& e) {
    throw IoError("malformed label map sidecar for " + stem.string() + ": " + e.what());
  } catch (const RecordError& e) {
    throw IoError(std::string("label map raster: ") + e.what());
  }
  if ((map.labels > 3).any()) throw LabelError("label map " + stem.string() + " contains values outside {0,1,2,3}");
  return map;
}

void write_overlay_png(const Raster& image, const MaskRaster& predicted_tumor, const MaskRaster& truth,
                       const fs::path& path) {
  const Index h = image.rows(), w = image.cols();
  if (predicted_tumor.rows() != h || truth.rows() != h || predicted_tumor.cols() != w || truth.cols() != w)
    throw ShapeError("overlay rasters must share one shape");
  const float lo = image.minCoeff(), hi = image.maxCoeff();
  const float scale = hi > lo ? 200.0f / (hi - lo) : 0.0f;

  std::vector<png_byte> rgb(static_cast<std::size_t>(h * w * 3));
  for (Index i = 0; i < h * w; ++i) {
    const bool p = predicted_tumor.data()[i] != 0, t = truth.data()[i] != 0;
    const auto grey = static_cast<png_byte>((image.data()[i] - lo) * scale);
    png_byte* px = &rgb[static_cast<std::size_t>(i * 3)];
    px[0] = p ? 255 : (t ? 0 : grey);
    px[1] = t ? 255 : (p ? 0 : grey);
    px[2] = (p || t) ? 0 : grey;
  }

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index i = 0; i < h; ++i) png_write_row(png, &rgb[static_cast<std::size_t>(i * w * 3)]);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

template LabelMap segment_slice(const MultiscaleNet<float>&, const SliceRecord&, const SegmentOptions&);
template LabelMap segment_slice(const MultiscaleNet<double>&, const SliceRecord&, const SegmentOptions&);
template EvalReport segment_and_evaluate(const MultiscaleNet<float>&, const std::vector<SliceRecord>&,
                                         const SegmentOptions&, double, const std::optional<fs::path>&, bool);
template EvalReport segment_and_evaluate(const MultiscaleNet<double>&, const std::vector<SliceRecord>&,
                                         const SegmentOptions&, double, const std::optional<fs::path>&, bool);

}  // namespace mscnn
