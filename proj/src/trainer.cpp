#include "mscnn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mscnn/checkpoint.hpp"
#include "mscnn/elastic.hpp"
#include "mscnn/errors.hpp"
#include "mscnn/segmenter.hpp"

namespace mscnn {
namespace fs = std::filesystem;

namespace {

// Stream identifiers mixed into the run seed.
enum Stream : std::uint64_t { kAugment = 1, kWindows = 2, kShuffle = 3, kDropout = 4, kInit = 5 };

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0,1)");
  if (!(decay_gamma > 0.0 && decay_gamma <= 1.0)) throw ConfigError("decay_gamma must be in (0,1]");
  if (decay_every < 1) throw ConfigError("decay_every must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (n_pos < 0 || n_neg < 0 || n_pos + n_neg == 0) throw ConfigError("window counts must be non-negative and not both zero");
}

double lr_schedule(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw ParameterError("epoch must be >= 0");
  return config.lr0 * std::pow(config.decay_gamma, epoch / config.decay_every);
}

template <typename Scalar>
void sgd_step(Tensor<Scalar>& param, const Tensor<Scalar>& grad, Tensor<Scalar>& velocity, double lr, double mu) {
  if (param.shape() != grad.shape() || param.shape() != velocity.shape())
    throw ShapeError("sgd_step shapes differ: " + shape_string(param.shape()) + ", " + shape_string(grad.shape()) +
                     ", " + shape_string(velocity.shape()));
  velocity.values() = static_cast<Scalar>(mu) * velocity.values() + grad.values();
  param.values() -= static_cast<Scalar>(lr) * velocity.values();
}

template <typename Scalar>
TrainHistory train(MultiscaleNet<Scalar>& net, const std::vector<SliceRecord>& train_records,
                   const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (train_records.empty()) throw DataError("training set is empty");
  const Index side = net.config().window;

  std::vector<SliceRecord> augmented;
  if (config.augment) {
    Rng rng(mix_seed(config.seed, kAugment));
    augmented = augment_training_set(train_records, rng);
  }
  const std::vector<SliceRecord>& slices = config.augment ? augmented : train_records;

  std::vector<WindowCenter> centers;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    Rng rng(mix_seed(config.seed, kWindows, s));
    auto part = sample_window_centers(slices[s], static_cast<Index>(s), config.n_pos, config.n_neg, rng);
    centers.insert(centers.end(), part.begin(), part.end());
  }
  const StandardizationStats stats = compute_standardization(slices, centers, side);
  net.stats = stats;
  net.seed = config.seed;

  auto params = net.parameters();
  if (net.velocity.empty())
    for (const auto& p : params) net.velocity.emplace_back(p.value->shape());
  if (net.velocity.size() != params.size()) throw StateError("momentum buffers do not match the network");

  const int last = std::min(config.epochs, options.stop_after.value_or(config.epochs));
  const auto total = static_cast<Index>(centers.size());
  TrainHistory history;
  if (options.checkpoint_dir) fs::create_directories(*options.checkpoint_dir);

  for (int epoch = static_cast<int>(net.epoch); epoch < last; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double lr = lr_schedule(config, epoch);
    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    Rng shuffle(mix_seed(config.seed, kShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle.shuffle(order);

    double loss_sum = 0.0;
    Index correct = 0;
    std::uint64_t step = 0;
    for (Index begin = 0; begin < total; begin += config.batch_size, ++step) {
      const Index end = std::min(total, begin + config.batch_size);
      const Tensor<Scalar> x = window_batch<Scalar>(slices, centers, order, begin, end, side, stats);
      std::vector<int> labels;
      labels.reserve(static_cast<std::size_t>(end - begin));
      for (Index n = begin; n < end; ++n) labels.push_back(centers[static_cast<std::size_t>(order[static_cast<std::size_t>(n)])].target);

      Rng dropout(mix_seed(mix_seed(config.seed, kDropout, static_cast<std::uint64_t>(epoch)), step));
      const auto out = net.forward(x, Mode::train, &dropout);
      const auto loss = softmax_cross_entropy(out.logits, labels);
      net.backward(loss.grad_logits);
      for (std::size_t i = 0; i < params.size(); ++i)
        sgd_step(*params[i].value, *params[i].grad, net.velocity[i], lr, config.momentum);

      loss_sum += static_cast<double>(loss.loss) * static_cast<double>(end - begin);
      for (Index n = 0; n < end - begin; ++n) {
        const Scalar* p = out.probs.data() + n * 4;
        int best = 0;
        for (int l = 1; l < 4; ++l)
          if (p[l] > p[best]) best = l;
        correct += best == labels[static_cast<std::size_t>(n)];
      }
    }
    net.epoch = epoch + 1;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.loss = loss_sum / static_cast<double>(total);
    rec.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.push_back(rec);

    if (options.checkpoint_dir) {
      save_checkpoint(net, *options.checkpoint_dir / "checkpoint.mscn");
      write_history_csv({rec}, *options.checkpoint_dir / "history.csv", epoch == 0);
    }
    if (options.on_epoch) options.on_epoch(rec);
  }
  return history;
}

void write_history_csv(const TrainHistory& history, const fs::path& path, bool header) {
  std::ofstream out(path, header ? std::ios::trunc : std::ios::app);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (header) out << "epoch,lr,loss,accuracy,seconds\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.6f,%.3f\n", r.epoch, r.lr, r.loss, r.accuracy, r.seconds);
    out << line;
  }
}

CrossValidationResult cross_validate(const std::vector<SliceRecord>& records, const CrossValidationConfig& config) {
  config.network.validate();
  config.train.validate();
  CrossValidationResult result;
  std::vector<SliceEval> pooled;
  for (int k : config.folds) {
    const FoldSplit split = fold_split(records, k);
    if (split.test.empty()) throw DataError("fold " + std::to_string(k) + " has no test slices");

    Rng init(mix_seed(config.train.seed, kInit, static_cast<std::uint64_t>(k)));
    MultiscaleNet<float> net(config.network, init);
    TrainOptions options;
    std::optional<fs::path> fold_dir;
    if (config.out_dir) {
      fold_dir = *config.out_dir / ("fold_" + std::to_string(k));
      options.checkpoint_dir = fold_dir;
    }
    train(net, split.train, config.train, options);

    FoldResult fold;
    fold.fold = k;
    fold.checkpoint = fold_dir ? (*fold_dir / "checkpoint.mscn").string() : std::string();
    SegmentOptions seg{config.stride, config.batch, fold.checkpoint};
    fold.report = segment_and_evaluate(net, split.test, seg, config.tau,
                                       fold_dir ? std::optional<fs::path>(*fold_dir / "labels") : std::nullopt);
    pooled.insert(pooled.end(), fold.report.slices.begin(), fold.report.slices.end());
    result.folds.push_back(std::move(fold));
  }
  result.aggregate = make_report(std::move(pooled), config.tau);
  return result;
}

std::uint64_t init_seed(std::uint64_t seed) { return mix_seed(seed, kInit); }

template void sgd_step(Tensor<float>&, const Tensor<float>&, Tensor<float>&, double, double);
template void sgd_step(Tensor<double>&, const Tensor<double>&, Tensor<double>&, double, double);
template TrainHistory train(MultiscaleNet<float>&, const std::vector<SliceRecord>&, const TrainConfig&,
                            const TrainOptions&);
template TrainHistory train(MultiscaleNet<double>&, const std::vector<SliceRecord>&, const TrainConfig&,
                            const TrainOptions&);

}  // namespace mscnn
