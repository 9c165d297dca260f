#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mscnn/dataset.hpp"
#include "mscnn/metrics.hpp"
#include "mscnn/network.hpp"
#include "mscnn/windows.hpp"

namespace mscnn {

struct TrainConfig {
  int epochs = 80;
  double lr0 = 0.005;
  double momentum = 0.9;
  double decay_gamma = 0.5;
  int decay_every = 20;
  Index batch_size = 64;
  Index n_pos = kDefaultPositiveWindows;
  Index n_neg = kDefaultNegativeWindows;
  bool augment = true;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 0-based
  double lr = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// lr0 * gamma^floor(epoch / decay_every).
double lr_schedule(const TrainConfig& config, int epoch);

/// Classical momentum: v <- mu v + g; w <- w - lr v.
template <typename Scalar>
void sgd_step(Tensor<Scalar>& param, const Tensor<Scalar>& grad, Tensor<Scalar>& velocity, double lr, double mu);

struct TrainOptions {
  /// When set, `checkpoint.mscn` is rewritten there after every epoch and
  /// `history.csv` is appended.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Stop after this many total epochs (<= config.epochs); used to split runs.
  std::optional<int> stop_after;
  /// Progress callback, invoked after each epoch.
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Augments the set, samples windows, stores standardization stats in the
/// network, then runs shuffled mini-batch SGD from `net.epoch` onwards.
/// Every random stream is derived from (config.seed, purpose, epoch, step),
/// so a run resumed from a checkpoint reproduces the uninterrupted one.
template <typename Scalar>
TrainHistory train(MultiscaleNet<Scalar>& net, const std::vector<SliceRecord>& train_records,
                   const TrainConfig& config, const TrainOptions& options = {});

/// Seed for the weight initialization stream of a run seeded with `seed`.
std::uint64_t init_seed(std::uint64_t seed);

/// Writes `epoch,lr,loss,accuracy,seconds` rows (with header when `header`).
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path, bool header);

struct CrossValidationConfig {
  NetworkConfig network;
  TrainConfig train;
  Index stride = 1;
  Index batch = 256;
  double tau = kDefaultTau;
  std::vector<int> folds = {0, 1, 2, 3, 4};
  std::optional<std::filesystem::path> out_dir;
};

struct FoldResult {
  int fold = 0;
  std::string checkpoint;
  EvalReport report;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  EvalReport aggregate;
};

/// One model per fold, evaluated on the held-out fold by sliding-window
/// segmentation; the aggregate pools every held-out slice.
CrossValidationResult cross_validate(const std::vector<SliceRecord>& records, const CrossValidationConfig& config);

}  // namespace mscnn
