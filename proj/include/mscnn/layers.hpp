#pragma once

#include <cstdint>
#include <vector>

#include "mscnn/rng.hpp"
#include "mscnn/tensor.hpp"

namespace mscnn {

enum class Mode { train, eval };

/// Stride-1 cross-correlation with "same" zero padding of (k-1)/2 per side.
/// Input and output are [B, C, H, W]; weights are [out, in, k, k].
template <typename Scalar>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(Index in_channels, Index out_channels, Index kernel);

  /// Caches the input for backward.
  Tensor<Scalar> forward(const Tensor<Scalar>& input);
  /// Pure evaluation; no caching.
  Tensor<Scalar> apply(const Tensor<Scalar>& input) const;
  /// Overwrites grad_weights()/grad_bias() and returns the input gradient.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out);

  Index in_channels() const { return in_channels_; }
  Index out_channels() const { return out_channels_; }
  Index kernel() const { return kernel_; }
  Index param_count() const { return weights_.size() + bias_.size(); }

  Tensor<Scalar>& weights() { return weights_; }
  const Tensor<Scalar>& weights() const { return weights_; }
  Tensor<Scalar>& bias() { return bias_; }
  const Tensor<Scalar>& bias() const { return bias_; }
  const Tensor<Scalar>& grad_weights() const { return grad_weights_; }
  Tensor<Scalar>& grad_weights() { return grad_weights_; }
  const Tensor<Scalar>& grad_bias() const { return grad_bias_; }
  Tensor<Scalar>& grad_bias() { return grad_bias_; }

 private:
  void check_input(const Tensor<Scalar>& input) const;

  Index in_channels_ = 0;
  Index out_channels_ = 0;
  Index kernel_ = 0;
  Tensor<Scalar> weights_;
  Tensor<Scalar> bias_;
  Tensor<Scalar> grad_weights_;
  Tensor<Scalar> grad_bias_;
  Tensor<Scalar> input_;
  bool cached_ = false;
};

enum class PoolRounding { floor, ceil };

/// Max pooling over k x k windows. Windows that extend past the input (ceil
/// rounding) only consider in-bounds elements; ties go to the first element
/// in row-major scan order.
template <typename Scalar>
class MaxPool2d {
 public:
  MaxPool2d() = default;
  MaxPool2d(Index kernel, Index stride, PoolRounding rounding);

  static Index output_extent(Index in, Index kernel, Index stride, PoolRounding rounding);
  Index output_extent(Index in) const { return output_extent(in, kernel_, stride_, rounding_); }

  Tensor<Scalar> forward(const Tensor<Scalar>& input);
  Tensor<Scalar> apply(const Tensor<Scalar>& input) const;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) const;

  /// Flat input offsets of each output's maximum, from the last forward.
  const std::vector<std::int64_t>& argmax() const { return argmax_; }

  Index kernel() const { return kernel_; }
  Index stride() const { return stride_; }
  PoolRounding rounding() const { return rounding_; }

 private:
  Tensor<Scalar> run(const Tensor<Scalar>& input, std::vector<std::int64_t>* argmax) const;

  Index kernel_ = 2;
  Index stride_ = 2;
  PoolRounding rounding_ = PoolRounding::floor;
  Shape input_shape_;
  std::vector<std::int64_t> argmax_;
  bool cached_ = false;
};

/// max(0, x); the subgradient at exactly zero is taken as 0.
template <typename Scalar>
class Relu {
 public:
  Tensor<Scalar> forward(const Tensor<Scalar>& input);
  Tensor<Scalar> apply(const Tensor<Scalar>& input) const;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) const;

  const Tensor<Scalar>& cached_input() const { return input_; }

 private:
  Tensor<Scalar> input_;
  bool cached_ = false;
};

/// out = x W^T + b, with x flattened to [B, in_features].
template <typename Scalar>
class Linear {
 public:
  Linear() = default;
  Linear(Index in_features, Index out_features);

  Tensor<Scalar> forward(const Tensor<Scalar>& input);
  Tensor<Scalar> apply(const Tensor<Scalar>& input) const;
  /// Returns the input gradient in the shape the input had.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out);

  Index in_features() const { return in_features_; }
  Index out_features() const { return out_features_; }
  Index param_count() const { return weights_.size() + bias_.size(); }

  Tensor<Scalar>& weights() { return weights_; }
  const Tensor<Scalar>& weights() const { return weights_; }
  Tensor<Scalar>& bias() { return bias_; }
  const Tensor<Scalar>& bias() const { return bias_; }
  Tensor<Scalar>& grad_weights() { return grad_weights_; }
  const Tensor<Scalar>& grad_weights() const { return grad_weights_; }
  Tensor<Scalar>& grad_bias() { return grad_bias_; }
  const Tensor<Scalar>& grad_bias() const { return grad_bias_; }

 private:
  Index in_features_ = 0;
  Index out_features_ = 0;
  Tensor<Scalar> weights_;
  Tensor<Scalar> bias_;
  Tensor<Scalar> grad_weights_;
  Tensor<Scalar> grad_bias_;
  Tensor<Scalar> input_;
  bool cached_ = false;
};

/// Inverted dropout: kept elements are scaled by 1/(1-p) at train time, so
/// eval mode is the identity.
template <typename Scalar>
class Dropout {
 public:
  explicit Dropout(double p = 0.5);

  Tensor<Scalar> forward(const Tensor<Scalar>& input, Mode mode, Rng& rng);
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) const;

  double p() const { return p_; }

 private:
  double p_;
  Mode mode_ = Mode::eval;
  Tensor<Scalar> mask_;  // 0 or 1/(1-p)
  bool cached_ = false;
};

template <typename Scalar>
struct SoftmaxLoss {
  Scalar loss;
  Tensor<Scalar> probs;
  Tensor<Scalar> grad_logits;
};

/// Row-wise softmax of [B, K] logits (max-subtracted).
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits);

/// Mean cross-entropy over the batch, with gradient (probs - onehot) / B.
template <typename Scalar>
SoftmaxLoss<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits, const std::vector<int>& labels);

}  // namespace mscnn
