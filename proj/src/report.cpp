#include "mscnn/report.hpp"

#include <cstdio>
#include <fstream>

#include "mscnn/errors.hpp"

namespace mscnn {
using json = nlohmann::json;

json to_json(const SliceEval& e) {
  return json{{"id", e.id},
              {"l_gt", e.l_gt},
              {"l_p", e.l_p},
              {"dice", e.dice},
              {"sensitivity", e.sensitivity},
              {"pttas", e.pttas},
              {"ratios", e.scores.ratios},
              {"counts", e.scores.counts},
              {"tumor_pixels", e.scores.tumor_pixels}};
}

json to_json(const ConfusionReport& c) {
  return json{{"matrix", c.matrix},
              {"nonclassified", c.nonclassified},
              {"sensitivity", c.sensitivity},
              {"total", c.total},
              {"accuracy", c.accuracy}};
}

json to_json(const EvalReport& r) {
  json slices = json::array();
  for (const auto& e : r.slices) slices.push_back(to_json(e));
  return json{{"tau", r.tau},
              {"slice_count", r.slices.size()},
              {"mean_dice", r.mean_dice},
              {"mean_sensitivity", r.mean_sensitivity},
              {"mean_pttas", r.mean_pttas},
              {"confusion", to_json(r.confusion)},
              {"slices", slices}};
}

json to_json(const CrossValidationResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back({{"fold", f.fold}, {"checkpoint", f.checkpoint}, {"report", to_json(f.report)}});
  return json{{"folds", folds}, {"aggregate", to_json(r.aggregate)}};
}

EvalReport eval_report_from_json(const json& j) {
  try {
    std::vector<SliceEval> slices;
    for (const auto& s : j.at("slices")) {
      SliceEval e;
      e.id = s.at("id").get<std::string>();
      e.l_gt = s.at("l_gt").get<int>();
      e.l_p = s.at("l_p").get<int>();
      e.dice = s.at("dice").get<double>();
      e.sensitivity = s.at("sensitivity").get<double>();
      e.pttas = s.at("pttas").get<double>();
      e.scores.ratios = s.at("ratios").get<std::array<double, 3>>();
      e.scores.counts = s.at("counts").get<std::array<Eigen::Index, 3>>();
      e.scores.tumor_pixels = s.at("tumor_pixels").get<Eigen::Index>();
      slices.push_back(std::move(e));
    }
    return make_report(std::move(slices), j.at("tau").get<double>());
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed evaluation report: ") + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_histograms_csv(const MetricHistograms& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "bin_lower,bin_upper,dice,sensitivity,pttas\n";
  for (Eigen::Index b = 0; b < h.dice.bins(); ++b) {
    const auto i = static_cast<std::size_t>(b);
    out << h.dice.lower(b) << ',' << h.dice.lower(b + 1) << ',' << h.dice.counts[i] << ','
        << h.sensitivity.counts[i] << ',' << h.pttas.counts[i] << '\n';
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "tau,precision,classified\n";
  char line[96];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%.4f,%.6f,%lld\n", r.tau, r.precision, static_cast<long long>(r.classified));
    out << line;
  }
}

}  // namespace mscnn
