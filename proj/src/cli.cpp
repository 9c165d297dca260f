#include "mscnn/cli.hpp"

#include <omp.h>

#include <charconv>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "mscnn/checkpoint.hpp"
#include "mscnn/gradient_check.hpp"
#include "mscnn/phantom.hpp"
#include "mscnn/report.hpp"
#include "mscnn/segmenter.hpp"

namespace mscnn {
namespace fs = std::filesystem;

double parse_ratio(const std::string& text) {
  auto parse = [&text](std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw CLI::ValidationError("not a number: " + text);
    return v;
  };
  const auto slash = text.find('/');
  const double v = slash == std::string::npos
                       ? parse(text)
                       : parse(std::string_view(text).substr(0, slash)) / parse(std::string_view(text).substr(slash + 1));
  if (!(v > 0.0) || !std::isfinite(v)) throw CLI::ValidationError("width scale must be positive: " + text);
  return v;
}

namespace {

struct Context {
  RunConfig cfg;
  std::string width_scale = "1";
  Index fc_in = 0;
  Index n_slices = 30;
  Index size = 128;
  bool binary_positives = false;
  bool png = false;
  bool no_augment = false;
  Index grad_samples = 24;
  std::vector<int> folds = {0, 1, 2, 3, 4};
};

void add_network_options(CLI::App* app, Context& c) {
  app->add_option("--window", c.cfg.network.window, "Window side in pixels (odd)");
  app->add_option("--width-scale", c.width_scale, "Multiplier on every map count, e.g. 0.25 or 1/4");
  app->add_option("--fc-in", c.fc_in, "Linear-layer input length (0 = derive from window and width)");
  app->add_option("--dropout", c.cfg.network.dropout, "Dropout probability before the linear layer");
}

void add_train_options(CLI::App* app, Context& c) {
  app->add_option("--epochs", c.cfg.train.epochs, "Training epochs");
  app->add_option("--lr", c.cfg.train.lr0, "Initial learning rate");
  app->add_option("--momentum", c.cfg.train.momentum, "SGD momentum coefficient");
  app->add_option("--decay-gamma", c.cfg.train.decay_gamma, "Learning-rate factor per decay event");
  app->add_option("--decay-every", c.cfg.train.decay_every, "Epochs between learning-rate decays");
  app->add_option("--batch-size", c.cfg.train.batch_size, "Windows per SGD step");
  app->add_option("--n-pos", c.cfg.train.n_pos, "Tumor-centered windows per slice");
  app->add_option("--n-neg", c.cfg.train.n_neg, "Healthy-centered windows per slice");
  app->add_flag("--no-augment", c.no_augment, "Skip elastic augmentation");
}

void add_common_options(CLI::App* app, Context& c) {
  app->add_option("--seed", c.cfg.train.seed, "Run seed");
  app->add_option("--threads", c.cfg.threads, "Worker threads (0 = machine parallelism)");
  app->add_flag("--f64", c.cfg.f64, "Use 64-bit arithmetic");
}

NetworkConfig resolve_network(const Context& c) {
  NetworkConfig n = c.cfg.network;
  n.width_scale = parse_ratio(c.width_scale);
  n.fc_in = c.fc_in > 0 ? c.fc_in : n.flatten_length();
  n.validate();
  return n;
}

TrainConfig resolve_train(const Context& c) {
  TrainConfig t = c.cfg.train;
  t.augment = !c.no_augment;
  t.validate();
  return t;
}

std::vector<SliceRecord> select_fold(std::vector<SliceRecord> records, int fold) {
  if (fold < 0) return records;
  return fold_split(records, fold).test;
}

template <typename Scalar>
int run_train(const Context& c, std::ostream& out) {
  const NetworkConfig network = resolve_network(c);
  const TrainConfig tc = resolve_train(c);
  const auto records = load_dataset(c.cfg.data);
  const auto train_set = c.cfg.fold < 0 ? records : fold_split(records, c.cfg.fold).train;

  std::optional<MultiscaleNet<Scalar>> net;
  if (!c.cfg.resume.empty()) {
    net.emplace(load_checkpoint<Scalar>(c.cfg.resume));
    if (net->config() != network) throw ConfigError("resume checkpoint was trained with a different network config");
  } else {
    Rng init(init_seed(tc.seed));
    net.emplace(network, init);
  }
  TrainOptions options;
  options.checkpoint_dir = fs::path(c.cfg.out);
  if (c.cfg.stop_after > 0) options.stop_after = c.cfg.stop_after;
  options.on_epoch = [&out](const EpochRecord& r) {
    out << "epoch " << r.epoch << " lr " << r.lr << " loss " << r.loss << " acc " << r.accuracy << " ("
        << std::fixed << std::setprecision(1) << r.seconds << std::defaultfloat << std::setprecision(6) << " s)\n";
  };
  train(*net, train_set, tc, options);
  out << "checkpoint " << (fs::path(c.cfg.out) / "checkpoint.mscn").string() << "\n";
  return 0;
}

template <typename Scalar>
int run_segment(const Context& c, std::ostream& out) {
  const auto net = load_checkpoint<Scalar>(c.cfg.model);
  const auto records = select_fold(load_dataset(c.cfg.data), c.cfg.fold);
  SegmentOptions options{c.cfg.stride, c.cfg.batch, fs::path(c.cfg.model).filename().string()};
  fs::create_directories(c.cfg.out);
  for (const auto& rec : records) {
    const LabelMap map = segment_slice(net, rec, options);
    write_label_map(map, fs::path(c.cfg.out) / rec.id);
    if (c.png)
      write_overlay_png(rec.image, (map.labels > 0).cast<std::uint8_t>(), rec.mask, fs::path(c.cfg.out) / (rec.id + ".png"));
    out << rec.id << "\n";
  }
  return 0;
}

std::vector<LabelMap> read_label_dir(const fs::path& dir) {
  std::vector<fs::path> stems;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".labels") stems.push_back(entry.path());
  std::sort(stems.begin(), stems.end());
  std::vector<LabelMap> maps;
  for (const auto& s : stems) maps.push_back(read_label_map(s));
  return maps;
}

EvalReport evaluate_dir(const Context& c) {
  const auto records = select_fold(load_dataset(c.cfg.data), c.cfg.fold);
  const PositiveSet positives = c.binary_positives ? PositiveSet::any_tumor : PositiveSet::label_matched;
  std::vector<SliceEval> evals;
  for (const auto& rec : records) {
    const LabelMap map = read_label_map(fs::path(c.cfg.labels) / rec.id);
    evals.push_back(evaluate_slice(rec.id, map.labels, rec.mask, rec.label, c.cfg.tau, positives));
  }
  return make_report(std::move(evals), c.cfg.tau);
}

void print_summary(const EvalReport& r, std::ostream& out) {
  const auto& m = r.confusion;
  out << "slices " << r.slices.size() << "\n"
      << "accuracy " << m.accuracy << "\n"
      << "mean_dice " << r.mean_dice << "\n"
      << "mean_sensitivity " << r.mean_sensitivity << "\n"
      << "mean_pttas " << r.mean_pttas << "\n";
  for (int l = 1; l <= 3; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    out << "class " << l << ": " << m.matrix[i][0] << " " << m.matrix[i][1] << " " << m.matrix[i][2] << " | nc "
        << m.nonclassified[i] << " | sensitivity " << m.sensitivity[i] << "\n";
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context c;
  CLI::App app{"Multiscale CNN tumor segmentation and classification", "mscnn"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI run configuration; unknown keys are rejected");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-synthetic", "Write a phantom dataset");
  gen->add_option("--out", c.cfg.out, "Output directory")->required();
  gen->add_option("--n", c.n_slices, "Number of slices");
  gen->add_option("--size", c.size, "Slice side in pixels (>= 96)");
  gen->add_option("--seed", c.cfg.train.seed, "Generator seed");

  auto* trn = app.add_subcommand("train", "Train one model on all folds but --fold");
  trn->add_option("--data", c.cfg.data, "Dataset directory or manifest")->required();
  trn->add_option("--out", c.cfg.out, "Directory for checkpoint.mscn and history.csv")->required();
  trn->add_option("--fold", c.cfg.fold, "Held-out fold (-1 trains on every record)");
  trn->add_option("--resume", c.cfg.resume, "Continue from this checkpoint");
  trn->add_option("--stop-after", c.cfg.stop_after, "Stop once this many epochs are complete (0 = all)");
  add_network_options(trn, c);
  add_train_options(trn, c);
  add_common_options(trn, c);

  auto* cv = app.add_subcommand("cross-validate", "Train and evaluate one model per fold");
  cv->add_option("--data", c.cfg.data, "Dataset directory or manifest")->required();
  cv->add_option("--out", c.cfg.out, "Output directory")->required();
  cv->add_option("--folds", c.folds, "Folds to run");
  cv->add_option("--stride", c.cfg.stride, "Sliding-window stride");
  cv->add_option("--batch", c.cfg.batch, "Windows per inference pass");
  cv->add_option("--tau", c.cfg.tau, "Confidence threshold");
  add_network_options(cv, c);
  add_train_options(cv, c);
  add_common_options(cv, c);

  auto* seg = app.add_subcommand("segment", "Sliding-window label maps for a dataset");
  seg->add_option("--model", c.cfg.model, "Checkpoint")->required();
  seg->add_option("--data", c.cfg.data, "Dataset directory or manifest")->required();
  seg->add_option("--out", c.cfg.out, "Output directory for label maps")->required();
  seg->add_option("--fold", c.cfg.fold, "Only slices of this fold (-1 = all)")->default_val(-1);
  seg->add_option("--stride", c.cfg.stride, "Sliding-window stride");
  seg->add_option("--batch", c.cfg.batch, "Windows per inference pass");
  seg->add_flag("--png", c.png, "Also write overlay PNGs");
  add_common_options(seg, c);

  auto* cls = app.add_subcommand("classify", "Slice tumor type from label maps");
  cls->add_option("--labels", c.cfg.labels, "Directory of label maps")->required();
  cls->add_option("--tau", c.cfg.tau, "Confidence threshold");
  cls->add_option("--out", c.cfg.out, "Optional CSV output");

  auto* ev = app.add_subcommand("evaluate", "Metrics, confusion matrix and histograms");
  ev->add_option("--data", c.cfg.data, "Dataset directory or manifest")->required();
  ev->add_option("--labels", c.cfg.labels, "Directory of label maps")->required();
  ev->add_option("--out", c.cfg.out, "Output directory for report.json and histograms.csv")->required();
  ev->add_option("--fold", c.cfg.fold, "Only slices of this fold (-1 = all)")->default_val(-1);
  ev->add_option("--tau", c.cfg.tau, "Confidence threshold");
  ev->add_option("--bins", c.cfg.bins, "Histogram bins");
  ev->add_flag("--binary-positives", c.binary_positives, "Score Dice/sensitivity on {P>0} instead of {P=l_gt}");

  auto* sw = app.add_subcommand("sweep-threshold", "Precision versus confidence threshold");
  sw->add_option("--report", c.cfg.report, "report.json from evaluate")->required();
  sw->add_option("--points", c.cfg.tau_points, "Grid points over [0,1]");
  sw->add_option("--out", c.cfg.out, "CSV output (stdout when omitted)");

  auto* pc = app.add_subcommand("param-count", "Print the number of trainable parameters");
  add_network_options(pc, c);

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the full network gradient");
  add_network_options(gc, c);
  gc->add_option("--samples", c.grad_samples, "Coordinates probed per tensor (0 = all)");
  gc->add_option("--seed", c.cfg.train.seed, "Seed for weights, inputs and probe selection");
  gc->add_flag("--f64", c.cfg.f64, "64-bit arithmetic (the check always runs in 64-bit)");

  std::vector<const char*> argv{"mscnn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (c.cfg.threads > 0) omp_set_num_threads(c.cfg.threads);

    if (*gen) {
      save_dataset(generate_phantoms(static_cast<int>(c.n_slices), c.size, c.cfg.train.seed), c.cfg.out);
      out << "wrote " << c.n_slices << " slices to " << c.cfg.out << "\n";
      return 0;
    }
    if (*trn) return c.cfg.f64 ? run_train<double>(c, out) : run_train<float>(c, out);
    if (*cv) {
      CrossValidationConfig cvc;
      cvc.network = resolve_network(c);
      cvc.train = resolve_train(c);
      cvc.stride = c.cfg.stride;
      cvc.batch = c.cfg.batch;
      cvc.tau = c.cfg.tau;
      cvc.folds = c.folds;
      cvc.out_dir = fs::path(c.cfg.out);
      const auto result = cross_validate(load_dataset(c.cfg.data), cvc);
      write_json(to_json(result), fs::path(c.cfg.out) / "cross_validation.json");
      print_summary(result.aggregate, out);
      return 0;
    }
    if (*seg) return c.cfg.f64 ? run_segment<double>(c, out) : run_segment<float>(c, out);
    if (*cls) {
      std::ostringstream csv;
      csv << "id,r1,r2,r3,tumor_pixels,l_p\n";
      for (const auto& map : read_label_dir(c.cfg.labels)) {
        const ClassScores s = class_scores(map.labels);
        csv << map.slice_id << ',' << s.ratios[0] << ',' << s.ratios[1] << ',' << s.ratios[2] << ','
            << s.tumor_pixels << ',' << predict_label(s, c.cfg.tau) << '\n';
      }
      if (c.cfg.out.empty()) {
        out << csv.str();
      } else {
        std::ofstream f(c.cfg.out);
        if (!f) throw IoError("cannot open " + c.cfg.out);
        f << csv.str();
      }
      return 0;
    }
    if (*ev) {
      const EvalReport report = evaluate_dir(c);
      fs::create_directories(c.cfg.out);
      write_json(to_json(report), fs::path(c.cfg.out) / "report.json");
      write_histograms_csv(metric_histograms(report.slices, c.cfg.bins), fs::path(c.cfg.out) / "histograms.csv");
      print_summary(report, out);
      return 0;
    }
    if (*sw) {
      const EvalReport report = eval_report_from_json(read_json(c.cfg.report));
      std::vector<std::pair<ClassScores, int>> scored;
      for (const auto& s : report.slices) scored.emplace_back(s.scores, s.l_gt);
      const auto rows = threshold_sweep(scored, tau_grid(c.cfg.tau_points));
      if (c.cfg.out.empty()) {
        out << "tau,precision,classified\n";
        for (const auto& r : rows) out << r.tau << ',' << r.precision << ',' << r.classified << '\n';
      } else {
        write_sweep_csv(rows, c.cfg.out);
      }
      return 0;
    }
    if (*pc) {
      out << MultiscaleNet<float>(resolve_network(c)).param_count() << "\n";
      return 0;
    }
    if (*gc) {
      const NetworkConfig network = resolve_network(c);
      Rng rng(init_seed(c.cfg.train.seed));
      MultiscaleNet<double> net(network, rng);
      // Non-zero biases so no unit sits exactly at a ReLU kink.
      for (auto& p : net.parameters())
        if (p.name.ends_with(".bias"))
          for (Index i = 0; i < p.value->size(); ++i) (*p.value)[i] = rng.uniform(-0.1, 0.1);
      Tensor<double> windows({2, 1, network.window, network.window});
      for (Index i = 0; i < windows.size(); ++i) windows[i] = rng.uniform(-1.0, 1.0);
      GradCheckOptions options;
      options.samples_per_tensor = c.grad_samples;
      options.seed = c.cfg.train.seed;
      const auto result = check_network_gradients(net, windows, {1, 3}, options);
      out << "max_relative_error " << std::scientific << result.max_rel_error << std::defaultfloat << "\n"
          << "checked " << result.checked << " skipped " << result.skipped << " worst " << result.worst << "\n";
      return result.max_rel_error < 1e-4 ? 0 : 1;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mscnn
