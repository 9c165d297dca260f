#include "mscnn/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace mscnn {
namespace {

using json = nlohmann::json;

std::string exact_decimal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_decimal(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw CheckpointError("malformed decimal '" + s + "' in checkpoint header");
  return v;
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }

  template <typename Scalar>
  void tensor(const Tensor<Scalar>& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (Index e : t.shape()) u32(static_cast<std::uint32_t>(e));
    for (Index i = 0; i < t.size(); ++i) u32(std::bit_cast<std::uint32_t>(static_cast<float>(t[i])));
  }

  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw TruncatedError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  template <typename Scalar>
  void tensor_into(Tensor<Scalar>& t, const std::string& name) {
    const std::uint32_t rank = u32();
    if (rank != static_cast<std::uint32_t>(t.rank())) throw CheckpointError("rank mismatch for " + name);
    for (Index e : t.shape())
      if (u32() != static_cast<std::uint32_t>(e)) throw CheckpointError("extent mismatch for " + name);
    need(static_cast<std::size_t>(t.size()) * 4);
    for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(std::bit_cast<float>(u32()));
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

json config_to_json(const NetworkConfig& c) {
  return json{{"window", c.window},           {"kernels", c.kernels},
              {"maps", c.maps},               {"concat_maps", c.concat_maps},
              {"concat_kernel", c.concat_kernel}, {"fc_in", c.fc_in},
              {"classes", c.classes},         {"dropout", c.dropout},
              {"width_scale", c.width_scale}};
}

NetworkConfig config_from_json(const json& j) {
  static const std::set<std::string> kKeys = {"window", "kernels", "maps", "concat_maps", "concat_kernel",
                                              "fc_in", "classes", "dropout", "width_scale"};
  if (!j.is_object()) throw ConfigError("network config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKeys.count(key)) throw ConfigError("unknown network config key '" + key + "'");
  NetworkConfig c;
  try {
    if (j.contains("window")) c.window = j.at("window").get<Index>();
    if (j.contains("kernels")) c.kernels = j.at("kernels").get<std::array<Index, 3>>();
    if (j.contains("maps")) c.maps = j.at("maps").get<std::array<Index, 3>>();
    if (j.contains("concat_maps")) c.concat_maps = j.at("concat_maps").get<Index>();
    if (j.contains("concat_kernel")) c.concat_kernel = j.at("concat_kernel").get<Index>();
    if (j.contains("fc_in")) c.fc_in = j.at("fc_in").get<Index>();
    if (j.contains("classes")) c.classes = j.at("classes").get<Index>();
    if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
    if (j.contains("width_scale")) c.width_scale = j.at("width_scale").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad network config: ") + e.what());
  }
  return c;
}

template <typename Scalar>
void save_checkpoint(const MultiscaleNet<Scalar>& net, const std::filesystem::path& path) {
  const auto params = net.parameters();
  const bool has_momentum = !net.velocity.empty();
  if (has_momentum && net.velocity.size() != params.size())
    throw StateError("momentum buffer count does not match parameter count");

  json header = {{"config", config_to_json(net.config())},
                 {"seed", net.seed},
                 {"epoch", net.epoch},
                 {"has_stats", net.stats.has_value()},
                 {"has_momentum", has_momentum},
                 {"mean", exact_decimal(net.stats ? net.stats->mean : 0.0)},
                 {"std", exact_decimal(net.stats ? net.stats->std : 1.0)}};
  const std::string text = header.dump();

  Writer w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text.data(), text.size());
  for (const auto& [name, t] : params) w.tensor(*t);
  if (has_momentum)
    for (const auto& v : net.velocity) w.tensor(v);

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename Scalar>
MultiscaleNet<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  if (r.str(4) != std::string(kCheckpointMagic, 4)) throw BadMagicError("not a checkpoint (bad magic): " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t header_len = r.u32();
  json header;
  try {
    header = json::parse(r.str(header_len));
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  NetworkConfig config;
  try {
    config = config_from_json(header.at("config"));
    config.validate();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }

  MultiscaleNet<Scalar> net(config);
  bool has_momentum = false;
  try {
    net.seed = header.at("seed").get<std::uint64_t>();
    net.epoch = header.at("epoch").get<std::int64_t>();
    has_momentum = header.at("has_momentum").get<bool>();
    if (header.at("has_stats").get<bool>())
      net.stats = StandardizationStats{parse_decimal(header.at("mean").get<std::string>()),
                                       parse_decimal(header.at("std").get<std::string>())};
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }

  for (auto& p : net.parameters()) r.tensor_into(*p.value, p.name);
  if (has_momentum) {
    for (auto& p : net.parameters()) {
      net.velocity.emplace_back(p.value->shape());
      r.tensor_into(net.velocity.back(), p.name + " (momentum)");
    }
  }
  if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint payload");
  return net;
}

template void save_checkpoint(const MultiscaleNet<float>&, const std::filesystem::path&);
template void save_checkpoint(const MultiscaleNet<double>&, const std::filesystem::path&);
template MultiscaleNet<float> load_checkpoint(const std::filesystem::path&);
template MultiscaleNet<double> load_checkpoint(const std::filesystem::path&);

}  // namespace mscnn
