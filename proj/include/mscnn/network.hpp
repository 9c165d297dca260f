#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mscnn/layers.hpp"
#include "mscnn/standardization.hpp"

namespace mscnn {

/// Hyper-parameters of the three-pathway network. Defaults give the
/// published 65x65 architecture with 2,856,932 trainable parameters.
struct NetworkConfig {
  Index window = 65;
  std::array<Index, 3> kernels{11, 7, 3};
  std::array<Index, 3> maps{128, 96, 64};
  Index concat_maps = 128;
  Index concat_kernel = 3;
  Index fc_in = 8192;
  Index classes = 4;
  double dropout = 0.5;
  /// Multiplier applied to every map count (rounded to nearest, min 1).
  double width_scale = 1.0;

  Index pathway_maps(std::size_t pathway) const;
  Index concat_out() const;
  /// Spatial side after both pathway pools (equal for all pathways).
  Index pathway_side() const;
  /// Flattened feature length entering the linear layer.
  Index flatten_length() const;

  /// Throws ConfigError on any inconsistency, including fc_in mismatch.
  void validate() const;

  /// Desk-scale variant: scaled widths and window, fc_in derived.
  static NetworkConfig reduced(double width_scale, Index window);

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// A view of one trainable tensor and its gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar>* value;
  Tensor<Scalar>* grad;
};

template <typename Scalar>
struct NetworkOutput {
  Tensor<Scalar> probs;
  Tensor<Scalar> logits;
};

template <typename Scalar>
class MultiscaleNet {
 public:
  /// Builds the network with fan-based uniform initialization and zero biases.
  MultiscaleNet(const NetworkConfig& config, Rng& rng);
  /// Builds the network with every weight and bias zero.
  explicit MultiscaleNet(const NetworkConfig& config);

  /// Input [B,1,window,window], already standardized. Caches activations.
  NetworkOutput<Scalar> forward(const Tensor<Scalar>& windows, Mode mode, Rng* rng = nullptr);
  /// Eval-mode pure forward.
  NetworkOutput<Scalar> predict(const Tensor<Scalar>& windows) const;
  /// Back-propagates dLoss/dlogits from the last forward; fills every
  /// parameter gradient and returns dLoss/dinput.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_logits);

  /// Parameters in declaration (and checkpoint) order.
  std::vector<Parameter<Scalar>> parameters();
  std::vector<std::pair<std::string, const Tensor<Scalar>*>> parameters() const;
  Index param_count() const;

  /// Per-stage output shapes recorded by the last forward/predict call.
  const std::vector<std::pair<std::string, Shape>>& stage_shapes() const { return stage_shapes_; }

  /// Hash of ReLU on/off states and pool argmax positions of the last
  /// forward; two forwards agree on it iff the piecewise-linear region is the same.
  std::uint64_t activation_signature() const;

  const NetworkConfig& config() const { return config_; }

  std::optional<StandardizationStats> stats;
  /// Momentum buffers, parallel to parameters(); empty until training starts.
  std::vector<Tensor<Scalar>> velocity;
  /// Completed training epochs.
  std::int64_t epoch = 0;
  std::uint64_t seed = 0;

 private:
  struct Pathway {
    Conv2d<Scalar> conv1;
    Relu<Scalar> relu1;
    MaxPool2d<Scalar> pool1;
    Conv2d<Scalar> conv2;
    Relu<Scalar> relu2;
    MaxPool2d<Scalar> pool2;
  };

  template <bool Cache, typename Self>
  static NetworkOutput<Scalar> run(Self& self, const Tensor<Scalar>& windows, Mode mode, Rng* rng);

  NetworkConfig config_;
  std::array<Pathway, 3> pathways_;
  Conv2d<Scalar> concat_conv_;
  Relu<Scalar> concat_relu_;
  MaxPool2d<Scalar> concat_pool_;
  Dropout<Scalar> dropout_;
  Linear<Scalar> fc_;
  Shape concat_pool_shape_;
  std::vector<std::pair<std::string, Shape>> stage_shapes_;
};

/// Channel-wise concatenation of rank-4 tensors with equal B, H, W.
template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<const Tensor<Scalar>*>& parts);

}  // namespace mscnn
