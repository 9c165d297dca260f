#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "mscnn/metrics.hpp"
#include "mscnn/trainer.hpp"

namespace mscnn {

nlohmann::json to_json(const SliceEval& e);
nlohmann::json to_json(const ConfusionReport& c);
/// Per-slice records, aggregate means and the confusion matrix.
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const CrossValidationResult& r);

/// Parses the JSON written by to_json(EvalReport).
EvalReport eval_report_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// `bin_lower,bin_upper,dice,sensitivity,pttas`.
void write_histograms_csv(const MetricHistograms& h, const std::filesystem::path& path);
/// `tau,precision,classified`.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace mscnn
