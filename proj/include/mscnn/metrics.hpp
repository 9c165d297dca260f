#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mscnn/label_map.hpp"

namespace mscnn {

inline constexpr double kDefaultTau = 0.75;
inline constexpr int kNonClassified = -1;

/// Fraction of predicted tumor pixels carrying each tumor label.
struct ClassScores {
  std::array<double, 3> ratios{0.0, 0.0, 0.0};
  std::array<Eigen::Index, 3> counts{0, 0, 0};
  Eigen::Index tumor_pixels = 0;
};

ClassScores class_scores(const MaskRaster& labels);

/// Label with the largest ratio strictly above tau (ties to the lower label),
/// or kNonClassified when none qualifies. Throws ParameterError for tau
/// outside [0,1].
int predict_label(const ClassScores& scores, double tau);

/// Which predicted pixels count as positives for Dice and sensitivity.
enum class PositiveSet {
  label_matched,  // {P == l_gt}
  any_tumor,      // {P > 0}
};

struct OverlapCounts {
  Eigen::Index true_positive = 0;
  Eigen::Index false_positive = 0;
  Eigen::Index false_negative = 0;
  Eigen::Index label_matched = 0;  // |{P == l_gt}|
  Eigen::Index predicted_tumor = 0;  // |{P > 0}|
};

OverlapCounts overlap_counts(const MaskRaster& labels, const MaskRaster& truth, int l_gt,
                             PositiveSet positives = PositiveSet::label_matched);

/// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double dice(const MaskRaster& labels, const MaskRaster& truth, int l_gt,
            PositiveSet positives = PositiveSet::label_matched);
/// TP / |T1|; 0 when the mask is empty.
double sensitivity(const MaskRaster& labels, const MaskRaster& truth, int l_gt,
                   PositiveSet positives = PositiveSet::label_matched);
/// |{P == l_gt}| / |{P > 0}|; 0 when nothing is predicted as tumor.
double pttas(const MaskRaster& labels, int l_gt);

double dice(const OverlapCounts& c);
double sensitivity(const OverlapCounts& c);
double pttas(const OverlapCounts& c);

struct SliceEval {
  std::string id;
  int l_gt = 1;
  int l_p = kNonClassified;
  double dice = 0.0;
  double sensitivity = 0.0;
  double pttas = 0.0;
  ClassScores scores;
};

SliceEval evaluate_slice(const std::string& id, const MaskRaster& labels, const MaskRaster& truth, int l_gt,
                         double tau, PositiveSet positives = PositiveSet::label_matched);

/// Rows: true class 1..3; columns: predicted class 1..3, plus a
/// nonclassified count per row.
struct ConfusionReport {
  std::array<std::array<Eigen::Index, 3>, 3> matrix{};
  std::array<Eigen::Index, 3> nonclassified{};
  std::array<double, 3> sensitivity{};
  Eigen::Index total = 0;
  double accuracy = 0.0;

  Eigen::Index row_total(int true_class) const;
};

ConfusionReport confusion(const std::vector<SliceEval>& evals);

struct SweepRow {
  double tau = 0.0;
  double precision = 0.0;
  Eigen::Index classified = 0;
};

/// `points` evenly spaced thresholds from 0 to 1 inclusive.
std::vector<double> tau_grid(Eigen::Index points);

std::vector<SweepRow> threshold_sweep(const std::vector<std::pair<ClassScores, int>>& scored,
                                      const std::vector<double>& taus);

struct Histogram {
  std::vector<Eigen::Index> counts;

  Eigen::Index bins() const { return static_cast<Eigen::Index>(counts.size()); }
  /// Lower edge of bin b over [0,1].
  double lower(Eigen::Index b) const { return static_cast<double>(b) / static_cast<double>(bins()); }
};

/// Equal-width bins over [0,1]; 1.0 falls in the last bin.
Histogram histogram(const std::vector<double>& values, Eigen::Index bins);

struct MetricHistograms {
  Histogram dice;
  Histogram sensitivity;
  Histogram pttas;
};

MetricHistograms metric_histograms(const std::vector<SliceEval>& evals, Eigen::Index bins);

struct EvalReport {
  double tau = kDefaultTau;
  std::vector<SliceEval> slices;
  ConfusionReport confusion;
  double mean_dice = 0.0;
  double mean_sensitivity = 0.0;
  double mean_pttas = 0.0;
};

EvalReport make_report(std::vector<SliceEval> slices, double tau);

}  // namespace mscnn
