#include "mscnn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mscnn {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / scale;
}

void GradCheckResult::merge(const GradCheckResult& other) {
  if (other.checked > 0 && other.max_rel_error >= max_rel_error) {
    max_rel_error = other.max_rel_error;
    worst = other.worst;
  }
  checked += other.checked;
  skipped += other.skipped;
}

GradCheckResult check_coordinates(const std::string& name, Tensor<double>& values, const Tensor<double>& analytic,
                                  const std::function<double()>& loss, const GradCheckOptions& options,
                                  const std::function<std::uint64_t()>& region) {
  if (values.shape() != analytic.shape()) throw ShapeError("gradient shape mismatch for " + name);
  std::vector<Index> coords(static_cast<std::size_t>(values.size()));
  std::iota(coords.begin(), coords.end(), Index{0});
  if (options.samples_per_tensor > 0 && options.samples_per_tensor < values.size()) {
    Rng rng(mix_seed(options.seed, std::hash<std::string>{}(name)));
    rng.shuffle(coords);
    coords.resize(static_cast<std::size_t>(options.samples_per_tensor));
    std::sort(coords.begin(), coords.end());
  }

  const std::uint64_t base_region = region ? (loss(), region()) : 0;
  GradCheckResult result;
  for (Index i : coords) {
    const double saved = values[i];
    values[i] = saved + options.eps;
    const double plus = loss();
    const bool plus_same = !region || region() == base_region;
    values[i] = saved - options.eps;
    const double minus = loss();
    const bool minus_same = !region || region() == base_region;
    values[i] = saved;
    if (!plus_same || !minus_same) {
      ++result.skipped;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * options.eps);
    const double err = relative_error(analytic[i], numeric);
    ++result.checked;
    if (err >= result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = name + "[" + std::to_string(i) + "]";
    }
  }
  return result;
}

GradCheckResult check_network_gradients(MultiscaleNet<double>& net, Tensor<double> windows,
                                        const std::vector<int>& labels, const GradCheckOptions& options) {
  auto loss = [&] { return softmax_cross_entropy(net.forward(windows, Mode::eval).logits, labels).loss; };
  auto region = [&] { return net.activation_signature(); };

  const auto base = softmax_cross_entropy(net.forward(windows, Mode::eval).logits, labels);
  const Tensor<double> grad_input = net.backward(base.grad_logits);

  GradCheckResult total;
  for (auto& p : net.parameters()) {
    const Tensor<double> analytic = *p.grad;
    total.merge(check_coordinates(p.name, *p.value, analytic, loss, options, region));
  }
  total.merge(check_coordinates("input", windows, grad_input, loss, options, region));
  return total;
}

}  // namespace mscnn
