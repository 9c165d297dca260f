#include "mscnn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mscnn/errors.hpp"

namespace mscnn {
namespace {

void check_shapes(const MaskRaster& labels, const MaskRaster& truth) {
  if (labels.rows() != truth.rows() || labels.cols() != truth.cols())
    throw ShapeError("label map " + std::to_string(labels.rows()) + "x" + std::to_string(labels.cols()) +
                     " does not match mask " + std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
}

double ratio(Eigen::Index num, Eigen::Index den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassScores class_scores(const MaskRaster& labels) {
  ClassScores s;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int l = labels.data()[i];
    if (l > 3) throw LabelError("label map value " + std::to_string(l) + " not in {0,1,2,3}");
    if (l > 0) ++s.counts[static_cast<std::size_t>(l - 1)];
  }
  s.tumor_pixels = s.counts[0] + s.counts[1] + s.counts[2];
  for (std::size_t l = 0; l < 3; ++l) s.ratios[l] = ratio(s.counts[l], s.tumor_pixels);
  return s;
}

int predict_label(const ClassScores& scores, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("confidence threshold must be in [0,1]");
  if (scores.tumor_pixels == 0) return kNonClassified;
  int best = kNonClassified;
  double best_f = 0.0;
  for (int l = 1; l <= 3; ++l) {
    const double r = scores.ratios[static_cast<std::size_t>(l - 1)];
    const double f = r > tau ? r : 0.0;
    if (f > best_f) {
      best_f = f;
      best = l;
    }
  }
  return best;
}

OverlapCounts overlap_counts(const MaskRaster& labels, const MaskRaster& truth, int l_gt, PositiveSet positives) {
  check_shapes(labels, truth);
  OverlapCounts c;
  Eigen::Index truth_count = 0, predicted = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int p = labels.data()[i];
    const bool t = truth.data()[i] != 0;
    const bool positive = positives == PositiveSet::label_matched ? p == l_gt : p > 0;
    c.label_matched += p == l_gt;
    c.predicted_tumor += p > 0;
    truth_count += t;
    predicted += positive;
    c.true_positive += positive && t;
  }
  c.false_positive = predicted - c.true_positive;
  c.false_negative = truth_count - c.true_positive;
  return c;
}

double dice(const OverlapCounts& c) {
  return ratio(2 * c.true_positive, 2 * c.true_positive + c.false_positive + c.false_negative);
}
double sensitivity(const OverlapCounts& c) { return ratio(c.true_positive, c.true_positive + c.false_negative); }
double pttas(const OverlapCounts& c) { return ratio(c.label_matched, c.predicted_tumor); }

double dice(const MaskRaster& labels, const MaskRaster& truth, int l_gt, PositiveSet positives) {
  return dice(overlap_counts(labels, truth, l_gt, positives));
}
double sensitivity(const MaskRaster& labels, const MaskRaster& truth, int l_gt, PositiveSet positives) {
  return sensitivity(overlap_counts(labels, truth, l_gt, positives));
}
double pttas(const MaskRaster& labels, int l_gt) {
  Eigen::Index matched = 0, tumor = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    matched += labels.data()[i] == l_gt;
    tumor += labels.data()[i] > 0;
  }
  return ratio(matched, tumor);
}

SliceEval evaluate_slice(const std::string& id, const MaskRaster& labels, const MaskRaster& truth, int l_gt,
                         double tau, PositiveSet positives) {
  if (l_gt < 1 || l_gt > 3) throw LabelError("ground-truth label " + std::to_string(l_gt) + " not in {1,2,3}");
  const OverlapCounts c = overlap_counts(labels, truth, l_gt, positives);
  SliceEval e;
  e.id = id;
  e.l_gt = l_gt;
  e.scores = class_scores(labels);
  e.l_p = predict_label(e.scores, tau);
  e.dice = dice(c);
  e.sensitivity = sensitivity(c);
  e.pttas = pttas(c);
  return e;
}

Eigen::Index ConfusionReport::row_total(int true_class) const {
  const auto r = static_cast<std::size_t>(true_class - 1);
  return matrix[r][0] + matrix[r][1] + matrix[r][2] + nonclassified[r];
}

ConfusionReport confusion(const std::vector<SliceEval>& evals) {
  ConfusionReport rep;
  for (const auto& e : evals) {
    if (e.l_gt < 1 || e.l_gt > 3) throw LabelError("ground-truth label " + std::to_string(e.l_gt) + " not in {1,2,3}");
    const auto row = static_cast<std::size_t>(e.l_gt - 1);
    if (e.l_p == kNonClassified)
      ++rep.nonclassified[row];
    else if (e.l_p >= 1 && e.l_p <= 3)
      ++rep.matrix[row][static_cast<std::size_t>(e.l_p - 1)];
    else
      throw LabelError("predicted label " + std::to_string(e.l_p) + " not in {-1,1,2,3}");
    ++rep.total;
  }
  Eigen::Index diagonal = 0;
  for (int l = 1; l <= 3; ++l) {
    const auto r = static_cast<std::size_t>(l - 1);
    diagonal += rep.matrix[r][r];
    rep.sensitivity[r] = ratio(rep.matrix[r][r], rep.row_total(l));
  }
  rep.accuracy = ratio(diagonal, rep.total);
  return rep;
}

std::vector<double> tau_grid(Eigen::Index points) {
  if (points < 2) throw ParameterError("threshold grid needs at least 2 points");
  std::vector<double> taus(static_cast<std::size_t>(points));
  for (Eigen::Index i = 0; i < points; ++i)
    taus[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(points - 1);
  return taus;
}

std::vector<SweepRow> threshold_sweep(const std::vector<std::pair<ClassScores, int>>& scored,
                                      const std::vector<double>& taus) {
  std::vector<SweepRow> rows;
  rows.reserve(taus.size());
  for (double tau : taus) {
    SweepRow row{tau, 0.0, 0};
    Eigen::Index correct = 0;
    for (const auto& [scores, l_gt] : scored) {
      const int l_p = predict_label(scores, tau);
      row.classified += l_p != kNonClassified;
      correct += l_p == l_gt;
    }
    row.precision = ratio(correct, static_cast<Eigen::Index>(scored.size()));
    rows.push_back(row);
  }
  return rows;
}

Histogram histogram(const std::vector<double>& values, Eigen::Index bins) {
  if (bins < 1) throw ParameterError("histogram needs at least one bin");
  Histogram h{std::vector<Eigen::Index>(static_cast<std::size_t>(bins), 0)};
  for (double v : values) {
    const auto b = static_cast<Eigen::Index>(std::floor(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins)));
    ++h.counts[static_cast<std::size_t>(std::min(b, bins - 1))];
  }
  return h;
}

MetricHistograms metric_histograms(const std::vector<SliceEval>& evals, Eigen::Index bins) {
  std::vector<double> d, s, p;
  for (const auto& e : evals) {
    d.push_back(e.dice);
    s.push_back(e.sensitivity);
    p.push_back(e.pttas);
  }
  return {histogram(d, bins), histogram(s, bins), histogram(p, bins)};
}

EvalReport make_report(std::vector<SliceEval> slices, double tau) {
  EvalReport rep;
  rep.tau = tau;
  rep.slices = std::move(slices);
  rep.confusion = confusion(rep.slices);
  if (!rep.slices.empty()) {
    for (const auto& e : rep.slices) {
      rep.mean_dice += e.dice;
      rep.mean_sensitivity += e.sensitivity;
      rep.mean_pttas += e.pttas;
    }
    const auto n = static_cast<double>(rep.slices.size());
    rep.mean_dice /= n;
    rep.mean_sensitivity /= n;
    rep.mean_pttas /= n;
  }
  return rep;
}

}  // namespace mscnn
