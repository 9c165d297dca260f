#include "mscnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace mscnn {
namespace {

// Samples per partial weight-gradient accumulator. Fixed so the summation
// order does not depend on the number of threads.
constexpr Index kGradChunk = 8;

/// Unfolds one [C,H,W] sample into a (C*k*k) x (H*W) patch matrix for a
/// stride-1, same-padded k x k kernel.
template <typename Scalar>
void im2col(const Scalar* x, Index channels, Index height, Index width, Index k, Scalar* col) {
  const Index pad = (k - 1) / 2;
  const Index plane = height * width;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* src_plane = x + c * plane;
    for (Index u = 0; u < k; ++u) {
      for (Index v = 0; v < k; ++v) {
        Scalar* dst = col + ((c * k + u) * k + v) * plane;
        const Index j_lo = std::max<Index>(0, pad - v);
        const Index j_hi = std::min<Index>(width, width + pad - v);
        for (Index i = 0; i < height; ++i) {
          Scalar* d = dst + i * width;
          const Index si = i + u - pad;
          if (si < 0 || si >= height || j_lo >= j_hi) {
            std::fill(d, d + width, Scalar(0));
            continue;
          }
          const Scalar* s = src_plane + si * width;
          std::fill(d, d + j_lo, Scalar(0));
          std::memcpy(d + j_lo, s + j_lo + v - pad, static_cast<std::size_t>(j_hi - j_lo) * sizeof(Scalar));
          std::fill(d + j_hi, d + width, Scalar(0));
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters-adds the patch matrix back into a sample.
template <typename Scalar>
void col2im(const Scalar* col, Index channels, Index height, Index width, Index k, Scalar* x) {
  const Index pad = (k - 1) / 2;
  const Index plane = height * width;
  std::fill(x, x + channels * plane, Scalar(0));
  for (Index c = 0; c < channels; ++c) {
    Scalar* dst_plane = x + c * plane;
    for (Index u = 0; u < k; ++u) {
      for (Index v = 0; v < k; ++v) {
        const Scalar* src = col + ((c * k + u) * k + v) * plane;
        const Index j_lo = std::max<Index>(0, pad - v);
        const Index j_hi = std::min<Index>(width, width + pad - v);
        for (Index i = 0; i < height; ++i) {
          const Index si = i + u - pad;
          if (si < 0 || si >= height) continue;
          const Scalar* s = src + i * width;
          Scalar* d = dst_plane + si * width;
          for (Index j = j_lo; j < j_hi; ++j) d[j + v - pad] += s[j];
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename Scalar>
Conv2d<Scalar>::Conv2d(Index in_channels, Index out_channels, Index kernel)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      weights_({out_channels, in_channels, kernel, kernel}),
      bias_({out_channels}),
      grad_weights_({out_channels, in_channels, kernel, kernel}),
      grad_bias_({out_channels}) {
  if (kernel % 2 == 0) throw ParameterError("convolution kernel must be odd, got " + std::to_string(kernel));
}

template <typename Scalar>
void Conv2d<Scalar>::check_input(const Tensor<Scalar>& input) const {
  if (input.rank() != 4 || input.dim(1) != in_channels_)
    throw ShapeError("conv2d expects [B," + std::to_string(in_channels_) + ",H,W], got " +
                     shape_string(input.shape()));
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::forward(const Tensor<Scalar>& input) {
  Tensor<Scalar> out = apply(input);
  input_ = input;
  cached_ = true;
  return out;
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::apply(const Tensor<Scalar>& input) const {
  check_input(input);
  const Index batch = input.dim(0), height = input.dim(2), width = input.dim(3);
  const Index plane = height * width;
  const Index patch = in_channels_ * kernel_ * kernel_;
  Tensor<Scalar> out({batch, out_channels_, height, width});
  const auto w = weights_.matrix(out_channels_, patch);
  const auto& b = bias_.values();

#pragma omp parallel
  {
    RowMatrix<Scalar> col(patch, plane);
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      im2col(input.data() + n * in_channels_ * plane, in_channels_, height, width, kernel_, col.data());
      auto y = out.matrix(out_channels_, plane, n * out_channels_ * plane);
      y.noalias() = w * col;
      y.colwise() += b;
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  if (!cached_) throw StateError("conv2d backward called before forward");
  const Index batch = input_.dim(0), height = input_.dim(2), width = input_.dim(3);
  if (grad_out.shape() != Shape{batch, out_channels_, height, width})
    throw ShapeError("conv2d grad_out shape " + shape_string(grad_out.shape()) + " does not match output");
  const Index plane = height * width;
  const Index patch = in_channels_ * kernel_ * kernel_;
  const auto w = weights_.matrix(out_channels_, patch);

  Tensor<Scalar> grad_in(input_.shape());
  const Index chunks = (batch + kGradChunk - 1) / kGradChunk;
  std::vector<RowMatrix<Scalar>> partial_w(static_cast<std::size_t>(chunks));
  std::vector<Vector<Scalar>> partial_b(static_cast<std::size_t>(chunks));

#pragma omp parallel
  {
    RowMatrix<Scalar> col(patch, plane);
    RowMatrix<Scalar> dcol(patch, plane);
#pragma omp for schedule(dynamic)
    for (Index chunk = 0; chunk < chunks; ++chunk) {
      auto& pw = partial_w[static_cast<std::size_t>(chunk)];
      auto& pb = partial_b[static_cast<std::size_t>(chunk)];
      pw = RowMatrix<Scalar>::Zero(out_channels_, patch);
      pb = Vector<Scalar>::Zero(out_channels_);
      const Index end = std::min(batch, (chunk + 1) * kGradChunk);
      for (Index n = chunk * kGradChunk; n < end; ++n) {
        im2col(input_.data() + n * in_channels_ * plane, in_channels_, height, width, kernel_, col.data());
        const auto g = grad_out.matrix(out_channels_, plane, n * out_channels_ * plane);
        pw.noalias() += g * col.transpose();
        pb += g.rowwise().sum();
        dcol.noalias() = w.transpose() * g;
        col2im(dcol.data(), in_channels_, height, width, kernel_, grad_in.data() + n * in_channels_ * plane);
      }
    }
  }

  auto gw = grad_weights_.matrix(out_channels_, patch);
  gw.setZero();
  grad_bias_.set_zero();
  for (Index chunk = 0; chunk < chunks; ++chunk) {
    gw += partial_w[static_cast<std::size_t>(chunk)];
    grad_bias_.values() += partial_b[static_cast<std::size_t>(chunk)];
  }
  return grad_in;
}

// ------------------------------------------------------------- MaxPool2d

template <typename Scalar>
MaxPool2d<Scalar>::MaxPool2d(Index kernel, Index stride, PoolRounding rounding)
    : kernel_(kernel), stride_(stride), rounding_(rounding) {
  if (kernel < 1 || stride < 1) throw ParameterError("pool kernel and stride must be >= 1");
}

template <typename Scalar>
Index MaxPool2d<Scalar>::output_extent(Index in, Index kernel, Index stride, PoolRounding rounding) {
  if (in <= kernel) return 1;
  const Index span = in - kernel;
  return (rounding == PoolRounding::floor ? span / stride : (span + stride - 1) / stride) + 1;
}

template <typename Scalar>
Tensor<Scalar> MaxPool2d<Scalar>::run(const Tensor<Scalar>& input, std::vector<std::int64_t>* argmax) const {
  if (input.rank() != 4) throw ShapeError("maxpool expects a rank-4 tensor, got " + shape_string(input.shape()));
  const Index batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const Index oh = output_extent(height), ow = output_extent(width);
  Tensor<Scalar> out({batch, channels, oh, ow});
  if (argmax) argmax->assign(static_cast<std::size_t>(out.size()), 0);

  const Index planes = batch * channels;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    const Scalar* x = input.data() + p * height * width;
    Scalar* y = out.data() + p * oh * ow;
    for (Index oi = 0; oi < oh; ++oi) {
      const Index i0 = oi * stride_, i1 = std::min(i0 + kernel_, height);
      for (Index oj = 0; oj < ow; ++oj) {
        const Index j0 = oj * stride_, j1 = std::min(j0 + kernel_, width);
        Index best = i0 * width + j0;
        Scalar best_value = x[best];
        for (Index i = i0; i < i1; ++i)
          for (Index j = j0; j < j1; ++j)
            if (x[i * width + j] > best_value) {
              best_value = x[i * width + j];
              best = i * width + j;
            }
        y[oi * ow + oj] = best_value;
        if (argmax) (*argmax)[static_cast<std::size_t>(p * oh * ow + oi * ow + oj)] = p * height * width + best;
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> MaxPool2d<Scalar>::forward(const Tensor<Scalar>& input) {
  Tensor<Scalar> out = run(input, &argmax_);
  input_shape_ = input.shape();
  cached_ = true;
  return out;
}

template <typename Scalar>
Tensor<Scalar> MaxPool2d<Scalar>::apply(const Tensor<Scalar>& input) const {
  return run(input, nullptr);
}

template <typename Scalar>
Tensor<Scalar> MaxPool2d<Scalar>::backward(const Tensor<Scalar>& grad_out) const {
  if (!cached_) throw StateError("maxpool backward called before forward");
  if (grad_out.size() != static_cast<Index>(argmax_.size()))
    throw ShapeError("maxpool grad_out shape " + shape_string(grad_out.shape()) + " does not match output");
  Tensor<Scalar> grad_in(input_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) grad_in[argmax_[o]] += grad_out[static_cast<Index>(o)];
  return grad_in;
}

// ------------------------------------------------------------------ Relu

template <typename Scalar>
Tensor<Scalar> Relu<Scalar>::forward(const Tensor<Scalar>& input) {
  input_ = input;
  cached_ = true;
  return apply(input);
}

template <typename Scalar>
Tensor<Scalar> Relu<Scalar>::apply(const Tensor<Scalar>& input) const {
  Tensor<Scalar> out(input.shape());
  out.values() = input.values().cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
Tensor<Scalar> Relu<Scalar>::backward(const Tensor<Scalar>& grad_out) const {
  if (!cached_) throw StateError("relu backward called before forward");
  if (grad_out.shape() != input_.shape()) throw ShapeError("relu grad_out shape mismatch");
  Tensor<Scalar> grad_in(grad_out.shape());
  grad_in.values() = (input_.values().array() > Scalar(0)).select(grad_out.values(), Scalar(0));
  return grad_in;
}

// ---------------------------------------------------------------- Linear

template <typename Scalar>
Linear<Scalar>::Linear(Index in_features, Index out_features)
    : in_features_(in_features),
      out_features_(out_features),
      weights_({out_features, in_features}),
      bias_({out_features}),
      grad_weights_({out_features, in_features}),
      grad_bias_({out_features}) {}

template <typename Scalar>
Tensor<Scalar> Linear<Scalar>::forward(const Tensor<Scalar>& input) {
  Tensor<Scalar> out = apply(input);
  input_ = input;
  cached_ = true;
  return out;
}

template <typename Scalar>
Tensor<Scalar> Linear<Scalar>::apply(const Tensor<Scalar>& input) const {
  const Index batch = input.dim(0);
  if (input.size() != batch * in_features_)
    throw ShapeError("linear expects " + std::to_string(in_features_) + " features per sample, got shape " +
                     shape_string(input.shape()));
  const auto x = input.matrix(batch, in_features_);
  const auto w = weights_.matrix(out_features_, in_features_);
  Tensor<Scalar> out({batch, out_features_});
  auto y = out.matrix(batch, out_features_);
  // Per-sample products keep each row independent of the batch composition.
  for (Index n = 0; n < batch; ++n) y.row(n).noalias() = (w * x.row(n).transpose()).transpose() + bias_.values().transpose();
  return out;
}

template <typename Scalar>
Tensor<Scalar> Linear<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  if (!cached_) throw StateError("linear backward called before forward");
  const Index batch = input_.dim(0);
  if (grad_out.shape() != Shape{batch, out_features_}) throw ShapeError("linear grad_out shape mismatch");
  const auto x = input_.matrix(batch, in_features_);
  const auto g = grad_out.matrix(batch, out_features_);
  const auto w = weights_.matrix(out_features_, in_features_);
  grad_weights_.matrix(out_features_, in_features_).noalias() = g.transpose() * x;
  grad_bias_.values() = g.colwise().sum().transpose();
  Tensor<Scalar> grad_in(input_.shape());
  grad_in.matrix(batch, in_features_).noalias() = g * w;
  return grad_in;
}

// --------------------------------------------------------------- Dropout

template <typename Scalar>
Dropout<Scalar>::Dropout(double p) : p_(p) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout probability must be in [0,1), got " + std::to_string(p));
}

template <typename Scalar>
Tensor<Scalar> Dropout<Scalar>::forward(const Tensor<Scalar>& input, Mode mode, Rng& rng) {
  mode_ = mode;
  cached_ = true;
  if (mode == Mode::eval || p_ == 0.0) {
    mode_ = Mode::eval;
    return input;
  }
  const Scalar scale = Scalar(1.0 / (1.0 - p_));
  mask_ = Tensor<Scalar>(input.shape());
  for (Index i = 0; i < mask_.size(); ++i) mask_[i] = rng.bernoulli(1.0 - p_) ? scale : Scalar(0);
  Tensor<Scalar> out(input.shape());
  out.values() = input.values().cwiseProduct(mask_.values());
  return out;
}

template <typename Scalar>
Tensor<Scalar> Dropout<Scalar>::backward(const Tensor<Scalar>& grad_out) const {
  if (!cached_) throw StateError("dropout backward called before forward");
  if (mode_ == Mode::eval) return grad_out;
  if (grad_out.shape() != mask_.shape()) throw ShapeError("dropout grad_out shape mismatch");
  Tensor<Scalar> grad_in(grad_out.shape());
  grad_in.values() = grad_out.values().cwiseProduct(mask_.values());
  return grad_in;
}

// --------------------------------------------------------------- Softmax

template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [B,K], got " + shape_string(logits.shape()));
  Tensor<Scalar> probs(logits.shape());
  const auto z = logits.matrix(logits.dim(0), logits.dim(1));
  auto p = probs.matrix(logits.dim(0), logits.dim(1));
  for (Index n = 0; n < z.rows(); ++n) {
    p.row(n) = (z.row(n).array() - z.row(n).maxCoeff()).exp().matrix();
    p.row(n) /= p.row(n).sum();
  }
  return probs;
}

template <typename Scalar>
SoftmaxLoss<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy expects [B,K], got " + shape_string(logits.shape()));
  const Index batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<Index>(labels.size()) != batch) throw ShapeError("label count does not match batch size");
  for (int l : labels)
    if (l < 0 || l >= classes) throw LabelError("label " + std::to_string(l) + " out of range");

  SoftmaxLoss<Scalar> result{Scalar(0), softmax(logits), Tensor<Scalar>(logits.shape())};
  const auto z = logits.matrix(batch, classes);
  auto g = result.grad_logits.matrix(batch, classes);
  g = result.probs.matrix(batch, classes);
  Scalar total = 0;
  for (Index n = 0; n < batch; ++n) {
    const int l = labels[static_cast<std::size_t>(n)];
    const Scalar m = z.row(n).maxCoeff();
    // -log p_l computed from the log-sum-exp to stay finite for tiny p_l.
    total += std::log((z.row(n).array() - m).exp().sum()) - (z(n, l) - m);
    g(n, l) -= Scalar(1);
  }
  g /= static_cast<Scalar>(batch);
  result.loss = total / static_cast<Scalar>(batch);
  return result;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class Relu<float>;
template class Relu<double>;
template class Linear<float>;
template class Linear<double>;
template class Dropout<float>;
template class Dropout<double>;
template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template SoftmaxLoss<float> softmax_cross_entropy(const Tensor<float>&, const std::vector<int>&);
template SoftmaxLoss<double> softmax_cross_entropy(const Tensor<double>&, const std::vector<int>&);

}  // namespace mscnn
