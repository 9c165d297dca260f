#include "mscnn/dataset.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "mscnn/errors.hpp"

namespace mscnn {
namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(View view) {
  switch (view) {
    case View::sagittal: return "sagittal";
    case View::coronal: return "coronal";
    case View::axial: return "axial";
  }
  return "axial";
}

View view_from_string(const std::string& s) {
  if (s == "sagittal") return View::sagittal;
  if (s == "coronal") return View::coronal;
  if (s == "axial") return View::axial;
  throw ParameterError("unknown view '" + s + "'");
}

Eigen::Index SliceRecord::tumor_pixels() const { return (mask != 0).count(); }

void SliceRecord::validate() const {
  if (label < 1 || label > 3) throw RecordError(id, "label " + std::to_string(label) + " not in {1,2,3}");
  if (fold < 0 || fold >= kNumFolds) throw RecordError(id, "fold " + std::to_string(fold) + " not in 0..4");
  if (image.size() == 0) throw RecordError(id, "empty image");
  if (image.rows() != mask.rows() || image.cols() != mask.cols()) throw RecordError(id, "image and mask shapes differ");
  if ((mask > 1).any()) throw MaskError(id, "mask contains values other than 0 and 1");
  if (tumor_pixels() == 0) throw MaskError(id, "mask has no tumor pixels");
}

namespace {

std::vector<char> read_bytes(const fs::path& path, const std::string& id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordError(id, "missing file " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& path, const char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

Raster read_f32_raster(const fs::path& path, Eigen::Index height, Eigen::Index width) {
  const auto bytes = read_bytes(path, path.stem().string());
  if (static_cast<Eigen::Index>(bytes.size()) != height * width * 4)
    throw RecordError(path.stem().string(), "raster " + path.string() + " has " + std::to_string(bytes.size()) +
                                                " bytes, expected " + std::to_string(height * width * 4));
  Raster r(height, width);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[static_cast<std::size_t>(i * 4 + b)])) << (8 * b);
    r.data()[i] = std::bit_cast<float>(v);
  }
  return r;
}

void write_f32_raster(const Raster& raster, const fs::path& path) {
  std::vector<char> bytes(static_cast<std::size_t>(raster.size()) * 4);
  for (Eigen::Index i = 0; i < raster.size(); ++i) {
    const auto v = std::bit_cast<std::uint32_t>(raster.data()[i]);
    for (int b = 0; b < 4; ++b) bytes[static_cast<std::size_t>(i * 4 + b)] = static_cast<char>((v >> (8 * b)) & 0xffu);
  }
  write_bytes(path, bytes.data(), bytes.size());
}

MaskRaster read_u8_raster(const fs::path& path, Eigen::Index height, Eigen::Index width) {
  const auto bytes = read_bytes(path, path.stem().string());
  if (static_cast<Eigen::Index>(bytes.size()) != height * width)
    throw RecordError(path.stem().string(), "raster " + path.string() + " has " + std::to_string(bytes.size()) +
                                                " bytes, expected " + std::to_string(height * width));
  MaskRaster r(height, width);
  std::copy(bytes.begin(), bytes.end(), reinterpret_cast<char*>(r.data()));
  return r;
}

void write_u8_raster(const MaskRaster& raster, const fs::path& path) {
  write_bytes(path, reinterpret_cast<const char*>(raster.data()), static_cast<std::size_t>(raster.size()));
}

std::vector<SliceRecord> load_dataset(const fs::path& manifest_or_dir) {
  const fs::path manifest = fs::is_directory(manifest_or_dir) ? manifest_or_dir / "manifest.json" : manifest_or_dir;
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw IoError("manifest must be a JSON array of records");

  const fs::path base = manifest.parent_path();
  std::vector<SliceRecord> records;
  records.reserve(doc.size());
  for (const auto& entry : doc) {
    SliceRecord rec;
    rec.id = entry.value("id", std::string("<unnamed>"));
    Eigen::Index width = 0, height = 0;
    std::string image, mask;
    try {
      rec.pid = entry.at("pid").get<std::string>();
      rec.label = entry.at("label").get<int>();
      rec.view = view_from_string(entry.at("view").get<std::string>());
      rec.fold = entry.at("fold").get<int>();
      width = entry.at("width").get<Eigen::Index>();
      height = entry.at("height").get<Eigen::Index>();
      image = entry.at("image").get<std::string>();
      mask = entry.at("mask").get<std::string>();
    } catch (const json::exception& e) {
      throw RecordError(rec.id, std::string("bad manifest entry: ") + e.what());
    } catch (const ParameterError& e) {
      throw RecordError(rec.id, e.what());
    }
    if (width < 1 || height < 1) throw RecordError(rec.id, "non-positive raster size");
    if (rec.label < 1 || rec.label > 3) throw RecordError(rec.id, "label " + std::to_string(rec.label) + " not in {1,2,3}");
    try {
      rec.image = read_f32_raster(base / image, height, width);
      rec.mask = read_u8_raster(base / mask, height, width);
    } catch (const RecordError& e) {
      throw RecordError(rec.id, e.what());
    }
    rec.validate();
    records.push_back(std::move(rec));
  }
  return records;
}

void save_dataset(const std::vector<SliceRecord>& records, const fs::path& dir) {
  fs::create_directories(dir);
  json doc = json::array();
  for (const auto& rec : records) {
    rec.validate();
    const std::string image = rec.id + ".f32";
    const std::string mask = rec.id + ".mask";
    write_f32_raster(rec.image, dir / image);
    write_u8_raster(rec.mask, dir / mask);
    doc.push_back({{"id", rec.id},
                   {"pid", rec.pid},
                   {"label", rec.label},
                   {"view", to_string(rec.view)},
                   {"fold", rec.fold},
                   {"width", rec.width()},
                   {"height", rec.height()},
                   {"image", image},
                   {"mask", mask}});
  }
  const std::string text = doc.dump(1);
  write_bytes(dir / "manifest.json", text.data(), text.size());
}

FoldSplit fold_split(const std::vector<SliceRecord>& records, int k) {
  if (k < 0 || k >= kNumFolds) throw ParameterError("fold " + std::to_string(k) + " not in 0..4");
  FoldSplit split;
  for (const auto& rec : records) (rec.fold == k ? split.test : split.train).push_back(rec);
  return split;
}

}  // namespace mscnn
