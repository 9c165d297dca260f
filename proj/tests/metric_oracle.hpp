#pragma once

// Brute-force pixel-counting oracle for the segmentation metrics and the
// confusion matrix, plus randomized properties of the classification rule.

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "mscnn/metrics.hpp"
#include "mscnn/rng.hpp"
#include "mscnn/tensor.hpp"

namespace mscnn::test {

struct OracleCounts {
  long tp = 0, fp = 0, fn = 0, matched = 0, tumor = 0;
  std::array<long, 3> per_class{};
};

inline OracleCounts oracle_counts(const MaskRaster& p, const MaskRaster& t, int l_gt) {
  OracleCounts c;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      const int label = p(i, j);
      const bool truth = t(i, j) == 1;
      if (label == l_gt && truth) ++c.tp;
      if (label == l_gt && !truth) ++c.fp;
      if (label != l_gt && truth) ++c.fn;
      if (label == l_gt) ++c.matched;
      if (label != 0) {
        ++c.tumor;
        ++c.per_class[static_cast<std::size_t>(label - 1)];
      }
    }
  return c;
}

inline double oracle_div(long a, long b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

inline int oracle_label(const OracleCounts& c, double tau) {
  int best = -1;
  double best_r = 0.0;
  for (int l = 0; l < 3; ++l) {
    const double r = oracle_div(c.per_class[static_cast<std::size_t>(l)], c.tumor);
    if (r > tau && r > best_r) {
      best_r = r;
      best = l + 1;
    }
  }
  return best;
}

struct OracleReport {
  int pairs = 0;
  int mismatches = 0;
  std::string first_failure;
};

// Compares dice/sensitivity/pttas per pair and the confusion matrix over all
// pairs against integer counting. Equality is exact.
inline OracleReport run_metric_oracle(int pairs, std::uint64_t seed, double tau = kDefaultTau) {
  Rng rng(seed);
  OracleReport rep;
  std::vector<SliceEval> evals;
  std::array<std::array<long, 4>, 3> rows{};
  long correct = 0;
  auto fail = [&rep](const std::string& what) {
    if (rep.mismatches++ == 0) rep.first_failure = what;
  };
  for (int n = 0; n < pairs; ++n) {
    const Index h = 1 + static_cast<Index>(rng.below(12)), w = 1 + static_cast<Index>(rng.below(12));
    MaskRaster p(h, w), t(h, w);
    const double tumor_density = rng.uniform();
    // skewed label mix so that every classification branch is exercised
    std::array<double, 3> mix{rng.uniform(), rng.uniform() * 0.3, rng.uniform() * 0.1};
    const double mix_sum = mix[0] + mix[1] + mix[2];
    const int rotate = static_cast<int>(rng.below(3));
    for (Index i = 0; i < h * w; ++i) {
      t.data()[i] = rng.bernoulli(0.4) ? 1 : 0;
      std::uint8_t label = 0;
      if (rng.bernoulli(tumor_density)) {
        const double u = rng.uniform() * mix_sum;
        const int k = u < mix[0] ? 0 : u < mix[0] + mix[1] ? 1 : 2;
        label = static_cast<std::uint8_t>((k + rotate) % 3 + 1);
      }
      p.data()[i] = label;
    }
    const int l_gt = 1 + static_cast<int>(rng.below(3));
    const OracleCounts c = oracle_counts(p, t, l_gt);
    const SliceEval e = evaluate_slice("pair" + std::to_string(n), p, t, l_gt, tau);
    const std::string tag = "pair " + std::to_string(n) + ": ";
    if (e.dice != oracle_div(2 * c.tp, 2 * c.tp + c.fp + c.fn)) fail(tag + "dice");
    if (e.sensitivity != oracle_div(c.tp, c.tp + c.fn)) fail(tag + "sensitivity");
    if (e.pttas != oracle_div(c.matched, c.tumor)) fail(tag + "pttas");
    if (dice(p, t, l_gt) != e.dice || sensitivity(p, t, l_gt) != e.sensitivity || pttas(p, l_gt) != e.pttas)
      fail(tag + "free-function metrics");
    const int l_p = oracle_label(c, tau);
    if (e.l_p != l_p) fail(tag + "predicted label");
    rows[static_cast<std::size_t>(l_gt - 1)][static_cast<std::size_t>(l_p == -1 ? 3 : l_p - 1)]++;
    correct += l_p == l_gt;
    evals.push_back(e);
    ++rep.pairs;
  }
  const ConfusionReport cr = confusion(evals);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t col = 0; col < 3; ++col)
      if (cr.matrix[r][col] != rows[r][col]) fail("confusion cell");
    if (cr.nonclassified[r] != rows[r][3]) fail("nonclassified column");
    const long total = rows[r][0] + rows[r][1] + rows[r][2] + rows[r][3];
    if (cr.row_total(static_cast<int>(r) + 1) != total) fail("row total");
    if (cr.sensitivity[r] != oracle_div(rows[r][r], total)) fail("per-class sensitivity");
  }
  if (cr.total != pairs) fail("confusion total");
  if (cr.accuracy != oracle_div(correct, pairs)) fail("accuracy");
  return rep;
}

inline ClassScores scores_from_counts(const std::array<Index, 3>& counts) {
  ClassScores s;
  s.counts = counts;
  s.tumor_pixels = counts[0] + counts[1] + counts[2];
  for (std::size_t l = 0; l < 3; ++l)
    s.ratios[l] = s.tumor_pixels ? static_cast<double>(counts[l]) / static_cast<double>(s.tumor_pixels) : 0.0;
  return s;
}

struct ClassificationProperties {
  int triples = 0;
  int monotone_violations = 0;
  int majority_cases = 0;
  int majority_violations = 0;
  int tau_one_classified = 0;
  int symmetry_violations = 0;
};

// Random ratio triples from integer counts; checks monotonicity of the
// classified count over a 101-point grid, correctness of majorities at
// tau <= 0.5, nothing surviving tau = 1 and relabeling symmetry.
inline ClassificationProperties run_classification_properties(int triples, std::uint64_t seed) {
  Rng rng(seed);
  const auto taus = tau_grid(101);
  ClassificationProperties out;
  std::vector<std::pair<ClassScores, int>> scored;
  for (int n = 0; n < triples; ++n) {
    const Index scale = 1 + static_cast<Index>(rng.below(200));
    std::array<Index, 3> counts{};
    for (auto& c : counts) c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(scale) + 1));
    if (rng.bernoulli(0.3)) counts[rng.below(3)] += scale * 3;  // strong majorities
    const ClassScores s = scores_from_counts(counts);
    const int l_gt = 1 + static_cast<int>(rng.below(3));
    scored.emplace_back(s, l_gt);

    if (s.ratios[static_cast<std::size_t>(l_gt - 1)] > 0.5) {
      ++out.majority_cases;
      for (double tau : taus)
        if (tau <= 0.5 && predict_label(s, tau) != l_gt) {
          ++out.majority_violations;
          break;
        }
    }
    if (predict_label(s, 1.0) != kNonClassified) ++out.tau_one_classified;

    // permute classes: new class k holds old class perm[k]
    static constexpr std::array<std::array<int, 3>, 5> kPerms{
        {{1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}}};
    const auto& perm = kPerms[rng.below(5)];
    std::array<Index, 3> permuted{};
    for (std::size_t k = 0; k < 3; ++k) permuted[k] = counts[static_cast<std::size_t>(perm[k])];
    for (double tau : {0.0, 0.2, 0.34, 0.5, 0.75, 0.9}) {
      const int a = predict_label(s, tau), b = predict_label(scores_from_counts(permuted), tau);
      // ties resolve to the lowest label, so only compare when the winner is unique
      std::array<double, 3> f{};
      for (std::size_t l = 0; l < 3; ++l) f[l] = s.ratios[l] > tau ? s.ratios[l] : 0.0;
      int winners = 0;
      const double top = std::max({f[0], f[1], f[2]});
      for (double v : f) winners += top > 0.0 && v == top;
      if (winners > 1) continue;
      const int mapped = a == kNonClassified ? a : [&] {
        for (int k = 0; k < 3; ++k)
          if (perm[static_cast<std::size_t>(k)] == a - 1) return k + 1;
        return -2;
      }();
      if (b != mapped) ++out.symmetry_violations;
    }
    ++out.triples;
  }
  const auto rows = threshold_sweep(scored, taus);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].classified > rows[i - 1].classified) ++out.monotone_violations;
  return out;
}

}  // namespace mscnn::test
