#include "mscnn/network.hpp"

#include <cmath>

namespace mscnn {

Index NetworkConfig::pathway_maps(std::size_t pathway) const {
  return std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(maps.at(pathway)) * width_scale)));
}

Index NetworkConfig::concat_out() const {
  return std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(concat_maps) * width_scale)));
}

Index NetworkConfig::pathway_side() const {
  const Index first = MaxPool2d<float>::output_extent(window, 3, 2, PoolRounding::floor);
  return MaxPool2d<float>::output_extent(first, 3, 2, PoolRounding::ceil);
}

Index NetworkConfig::flatten_length() const {
  const Index side = MaxPool2d<float>::output_extent(pathway_side(), 2, 2, PoolRounding::floor);
  return concat_out() * side * side;
}

void NetworkConfig::validate() const {
  if (window < 1 || window % 2 == 0) throw ConfigError("window must be a positive odd side, got " + std::to_string(window));
  for (Index k : kernels)
    if (k < 1 || k % 2 == 0) throw ConfigError("pathway kernels must be odd, got " + std::to_string(k));
  if (concat_kernel < 1 || concat_kernel % 2 == 0) throw ConfigError("concat kernel must be odd");
  for (Index m : maps)
    if (m < 1) throw ConfigError("map counts must be >= 1");
  if (concat_maps < 1) throw ConfigError("concat map count must be >= 1");
  if (!(width_scale > 0.0)) throw ConfigError("width_scale must be positive");
  if (classes != 4) throw ConfigError("the classifier has exactly 4 classes, got " + std::to_string(classes));
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
  if (flatten_length() != fc_in)
    throw ConfigError("derived flatten length " + std::to_string(flatten_length()) + " != fc_in " + std::to_string(fc_in));
}

NetworkConfig NetworkConfig::reduced(double width_scale, Index window) {
  NetworkConfig config;
  config.width_scale = width_scale;
  config.window = window;
  config.fc_in = config.flatten_length();
  return config;
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<const Tensor<Scalar>*>& parts) {
  if (parts.empty()) throw ShapeError("concatenation of zero tensors");
  const Index batch = parts[0]->dim(0), height = parts[0]->dim(2), width = parts[0]->dim(3);
  Index channels = 0;
  for (const auto* p : parts) {
    if (p->rank() != 4 || p->dim(0) != batch || p->dim(2) != height || p->dim(3) != width)
      throw ShapeError("cannot concatenate " + shape_string(p->shape()) + " with " + shape_string(parts[0]->shape()));
    channels += p->dim(1);
  }
  const Index plane = height * width;
  Tensor<Scalar> out({batch, channels, height, width});
  for (Index n = 0; n < batch; ++n) {
    Scalar* dst = out.data() + n * channels * plane;
    for (const auto* p : parts) {
      const Index block = p->dim(1) * plane;
      std::copy_n(p->data() + n * block, block, dst);
      dst += block;
    }
  }
  return out;
}

namespace {

template <typename Scalar>
void glorot_uniform(Tensor<Scalar>& weights, Index fan_in, Index fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Index i = 0; i < weights.size(); ++i) weights[i] = static_cast<Scalar>(rng.uniform(-a, a));
}

template <typename Scalar>
Tensor<Scalar> slice_channels(const Tensor<Scalar>& t, Index first, Index count) {
  const Index batch = t.dim(0), channels = t.dim(1), plane = t.dim(2) * t.dim(3);
  Tensor<Scalar> out({batch, count, t.dim(2), t.dim(3)});
  for (Index n = 0; n < batch; ++n)
    std::copy_n(t.data() + (n * channels + first) * plane, count * plane, out.data() + n * count * plane);
  return out;
}

std::uint64_t fold_hash(std::uint64_t h, std::uint64_t v) { return (h ^ v) * 0x100000001b3ULL; }

}  // namespace

template <typename Scalar>
MultiscaleNet<Scalar>::MultiscaleNet(const NetworkConfig& config)
    : config_(config), dropout_(config.dropout) {
  config_.validate();
  Index concat_in = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    const Index k = config_.kernels[p], m = config_.pathway_maps(p);
    pathways_[p] = Pathway{Conv2d<Scalar>(1, m, k),
                           Relu<Scalar>{},
                           MaxPool2d<Scalar>(3, 2, PoolRounding::floor),
                           Conv2d<Scalar>(m, m, k),
                           Relu<Scalar>{},
                           MaxPool2d<Scalar>(3, 2, PoolRounding::ceil)};
    concat_in += m;
  }
  concat_conv_ = Conv2d<Scalar>(concat_in, config_.concat_out(), config_.concat_kernel);
  concat_pool_ = MaxPool2d<Scalar>(2, 2, PoolRounding::floor);
  fc_ = Linear<Scalar>(config_.fc_in, config_.classes);
}

template <typename Scalar>
MultiscaleNet<Scalar>::MultiscaleNet(const NetworkConfig& config, Rng& rng) : MultiscaleNet(config) {
  auto init_conv = [&rng](Conv2d<Scalar>& conv) {
    const Index kk = conv.kernel() * conv.kernel();
    glorot_uniform(conv.weights(), conv.in_channels() * kk, conv.out_channels() * kk, rng);
  };
  for (auto& path : pathways_) {
    init_conv(path.conv1);
    init_conv(path.conv2);
  }
  init_conv(concat_conv_);
  glorot_uniform(fc_.weights(), fc_.in_features(), fc_.out_features(), rng);
}

template <typename Scalar>
template <bool Cache, typename Self>
NetworkOutput<Scalar> MultiscaleNet<Scalar>::run(Self& self, const Tensor<Scalar>& windows, Mode mode, Rng* rng) {
  const NetworkConfig& cfg = self.config_;
  if (windows.rank() != 4 || windows.dim(1) != 1 || windows.dim(2) != cfg.window || windows.dim(3) != cfg.window)
    throw ShapeError("network expects [B,1," + std::to_string(cfg.window) + "," + std::to_string(cfg.window) +
                     "], got " + shape_string(windows.shape()));

  auto step = [](auto& layer, const Tensor<Scalar>& x) {
    if constexpr (Cache) return layer.forward(x);
    else return layer.apply(x);
  };
  auto record = [&self](std::string name, const Tensor<Scalar>& t) {
    if constexpr (Cache) self.stage_shapes_.emplace_back(std::move(name), t.shape());
  };
  if constexpr (Cache) self.stage_shapes_.clear();

  static const char* const kNames[] = {"large", "medium", "small"};
  std::array<Tensor<Scalar>, 3> branch;
  for (std::size_t p = 0; p < 3; ++p) {
    auto& path = self.pathways_[p];
    Tensor<Scalar> x = step(path.pool1, step(path.relu1, step(path.conv1, windows)));
    record(std::string(kNames[p]) + ".stage1", x);
    branch[p] = step(path.pool2, step(path.relu2, step(path.conv2, x)));
    record(std::string(kNames[p]) + ".stage2", branch[p]);
  }
  Tensor<Scalar> x = concat_channels<Scalar>({&branch[0], &branch[1], &branch[2]});
  record("concat", x);
  x = step(self.concat_relu_, step(self.concat_conv_, x));
  record("concat_conv", x);
  x = step(self.concat_pool_, x);
  record("concat_pool", x);
  if constexpr (Cache) self.concat_pool_shape_ = x.shape();
  x.reshape({x.dim(0), x.size() / x.dim(0)});
  record("flatten", x);

  if constexpr (Cache) {
    Rng unused(0);
    x = self.dropout_.forward(x, mode, rng ? *rng : unused);
    if (mode == Mode::train && !rng && self.dropout_.p() > 0.0) throw StateError("train-mode forward needs an rng");
  }
  NetworkOutput<Scalar> out;
  out.logits = step(self.fc_, x);
  out.probs = softmax(out.logits);
  return out;
}

template <typename Scalar>
NetworkOutput<Scalar> MultiscaleNet<Scalar>::forward(const Tensor<Scalar>& windows, Mode mode, Rng* rng) {
  return run<true>(*this, windows, mode, rng);
}

template <typename Scalar>
NetworkOutput<Scalar> MultiscaleNet<Scalar>::predict(const Tensor<Scalar>& windows) const {
  return run<false>(*this, windows, Mode::eval, nullptr);
}

template <typename Scalar>
Tensor<Scalar> MultiscaleNet<Scalar>::backward(const Tensor<Scalar>& grad_logits) {
  if (concat_pool_shape_.empty()) throw StateError("network backward called before forward");
  Tensor<Scalar> g = dropout_.backward(fc_.backward(grad_logits));
  g.reshape(concat_pool_shape_);
  g = concat_conv_.backward(concat_relu_.backward(concat_pool_.backward(g)));

  Tensor<Scalar> grad_input;
  Index first = 0;
  for (auto& path : pathways_) {
    const Index maps = path.conv2.out_channels();
    Tensor<Scalar> gp = slice_channels(g, first, maps);
    first += maps;
    gp = path.conv2.backward(path.relu2.backward(path.pool2.backward(gp)));
    gp = path.conv1.backward(path.relu1.backward(path.pool1.backward(gp)));
    if (grad_input.empty())
      grad_input = std::move(gp);
    else
      grad_input.values() += gp.values();
  }
  return grad_input;
}

template <typename Scalar>
std::vector<Parameter<Scalar>> MultiscaleNet<Scalar>::parameters() {
  std::vector<Parameter<Scalar>> params;
  static const char* const kNames[] = {"large", "medium", "small"};
  auto add_conv = [&params](const std::string& name, Conv2d<Scalar>& conv) {
    params.push_back({name + ".weight", &conv.weights(), &conv.grad_weights()});
    params.push_back({name + ".bias", &conv.bias(), &conv.grad_bias()});
  };
  for (std::size_t p = 0; p < 3; ++p) {
    add_conv(std::string(kNames[p]) + ".conv1", pathways_[p].conv1);
    add_conv(std::string(kNames[p]) + ".conv2", pathways_[p].conv2);
  }
  add_conv("concat.conv", concat_conv_);
  params.push_back({"fc.weight", &fc_.weights(), &fc_.grad_weights()});
  params.push_back({"fc.bias", &fc_.bias(), &fc_.grad_bias()});
  return params;
}

template <typename Scalar>
std::vector<std::pair<std::string, const Tensor<Scalar>*>> MultiscaleNet<Scalar>::parameters() const {
  std::vector<std::pair<std::string, const Tensor<Scalar>*>> out;
  for (const auto& p : const_cast<MultiscaleNet*>(this)->parameters()) out.emplace_back(p.name, p.value);
  return out;
}

template <typename Scalar>
Index MultiscaleNet<Scalar>::param_count() const {
  Index total = 0;
  for (const auto& [name, t] : parameters()) total += t->size();
  return total;
}

template <typename Scalar>
std::uint64_t MultiscaleNet<Scalar>::activation_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto relu_bits = [&h](const Relu<Scalar>& r) {
    const auto& x = r.cached_input();
    for (Index i = 0; i < x.size(); ++i) h = fold_hash(h, x[i] > Scalar(0) ? 1u : 2u);
  };
  auto pool_bits = [&h](const MaxPool2d<Scalar>& p) {
    for (auto a : p.argmax()) h = fold_hash(h, static_cast<std::uint64_t>(a));
  };
  for (const auto& path : pathways_) {
    relu_bits(path.relu1);
    pool_bits(path.pool1);
    relu_bits(path.relu2);
    pool_bits(path.pool2);
  }
  relu_bits(concat_relu_);
  pool_bits(concat_pool_);
  return h;
}

template class MultiscaleNet<float>;
template class MultiscaleNet<double>;
template Tensor<float> concat_channels(const std::vector<const Tensor<float>*>&);
template Tensor<double> concat_channels(const std::vector<const Tensor<double>*>&);

}  // namespace mscnn
