#include <fstream>

#include "doctest.h"
#include "metric_oracle.hpp"
#include "mscnn/report.hpp"
#include "support.hpp"

using namespace mscnn;

namespace {

std::vector<SliceEval> clinical_outcomes() {
  const int cells[3][4] = {{659, 4, 3, 42}, {7, 1414, 1, 4}, {1, 3, 911, 15}};
  std::vector<SliceEval> evals;
  for (int gt = 1; gt <= 3; ++gt)
    for (int col = 0; col < 4; ++col)
      for (int k = 0; k < cells[gt - 1][col]; ++k) {
        SliceEval e;
        e.l_gt = gt;
        e.l_p = col == 3 ? kNonClassified : col + 1;
        evals.push_back(e);
      }
  return evals;
}

MaskRaster raster(Index h, Index w, std::initializer_list<int> values) {
  MaskRaster m(h, w);
  Index i = 0;
  for (int v : values) m.data()[i++] = static_cast<std::uint8_t>(v);
  return m;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("class scores") {
    MaskRaster p = MaskRaster::Zero(10, 12);
    p.topRows(8).setConstant(2);
    p.block(8, 0, 2, 10).setConstant(1);
    const auto s = class_scores(p);
    CHECK(s.tumor_pixels == 116);
    CHECK(s.counts == std::array<Index, 3>{20, 96, 0});
    CHECK(s.ratios[0] + s.ratios[1] + s.ratios[2] == 1.0);

    MaskRaster q = MaskRaster::Zero(10, 10);
    q.topRows(8).setConstant(2);
    q.bottomRows(2).setConstant(1);
    const auto r = class_scores(q);
    CHECK(r.ratios[0] == 0.2);
    CHECK(r.ratios[1] == 0.8);
    CHECK(r.ratios[2] == 0.0);

    const auto z = class_scores(MaskRaster::Zero(4, 4));
    CHECK(z.tumor_pixels == 0);
    CHECK(z.ratios == std::array<double, 3>{0, 0, 0});
    CHECK_THROWS_AS(class_scores(MaskRaster::Constant(2, 2, 4)), LabelError);
  }

  TEST_CASE("classification rule examples") {
    auto scores = [](double a, double b, double c) {
      ClassScores s;
      s.ratios = {a, b, c};
      s.tumor_pixels = 100;
      return s;
    };
    CHECK(predict_label(scores(0.9, 0.05, 0.05), 0.75) == 1);
    CHECK(predict_label(scores(0.5, 0.3, 0.2), 0.75) == kNonClassified);
    CHECK(predict_label(scores(0.4, 0.35, 0.25), 0.3) == 1);
    CHECK(predict_label(scores(0.2, 0.4, 0.4), 0.1) == 2);
    CHECK(predict_label(scores(0.0, 0.0, 1.0), 1.0) == kNonClassified);
    CHECK(predict_label(ClassScores{}, 0.0) == kNonClassified);
    CHECK_THROWS_AS(predict_label(scores(1, 0, 0), 1.5), ParameterError);
    CHECK_THROWS_AS(predict_label(scores(1, 0, 0), -0.1), ParameterError);
  }

  TEST_CASE("dice and sensitivity on a hand-built 4x4 pair") {
    // TP = 6, FP = 2, FN = 2
    const auto p = raster(4, 4, {2, 2, 2, 0,  //
                                 2, 2, 2, 0,  //
                                 2, 2, 0, 0,  //
                                 0, 0, 0, 0});
    const auto t = raster(4, 4, {1, 1, 1, 0,  //
                                 1, 1, 0, 1,  //
                                 0, 1, 0, 1,  //
                                 0, 0, 0, 0});
    const auto c = overlap_counts(p, t, 2);
    CHECK(c.true_positive == 6);
    CHECK(c.false_positive == 2);
    CHECK(c.false_negative == 2);
    CHECK(dice(p, t, 2) == 0.75);
    CHECK(sensitivity(p, t, 2) == 0.75);
    CHECK(pttas(p, 2) == 1.0);
    CHECK(dice(p, t, 1) == 0.0);
    CHECK_THROWS_AS(dice(p, MaskRaster::Zero(3, 4), 2), ShapeError);
  }

  TEST_CASE("perfect prediction and pttas") {
    MaskRaster t = MaskRaster::Zero(8, 8);
    t.block(2, 2, 3, 3).setOnes();
    MaskRaster p = t * std::uint8_t{3};
    CHECK(dice(p, t, 3) == 1.0);
    CHECK(sensitivity(p, t, 3) == 1.0);
    CHECK(pttas(p, 3) == 1.0);

    MaskRaster q = MaskRaster::Zero(10, 10);
    q.topRows(9).setConstant(1);
    q.bottomRows(1).setConstant(3);
    CHECK(pttas(q, 1) == 0.9);
    CHECK(pttas(MaskRaster::Zero(3, 3), 1) == 0.0);
    CHECK(dice(MaskRaster::Zero(3, 3), MaskRaster::Zero(3, 3), 1) == 0.0);
  }

  TEST_CASE("binary positive set") {
    const auto p = raster(1, 4, {1, 2, 0, 3});
    const auto t = raster(1, 4, {1, 1, 1, 0});
    CHECK(sensitivity(p, t, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(sensitivity(p, t, 1, PositiveSet::any_tumor) == doctest::Approx(2.0 / 3.0));
    CHECK(dice(p, t, 1, PositiveSet::any_tumor) == doctest::Approx(4.0 / 6.0));
  }

  TEST_CASE("clinical confusion-matrix arithmetic") {
    const auto c = confusion(clinical_outcomes());
    CHECK(c.total == 3064);
    CHECK(c.nonclassified == std::array<Index, 3>{42, 4, 15});
    CHECK(c.accuracy == doctest::Approx(2984.0 / 3064.0).epsilon(1e-15));
    CHECK(std::abs(c.accuracy - 0.9739) < 0.0005);
    CHECK(std::abs(c.sensitivity[0] - 0.93) < 0.005);
    CHECK(std::abs(c.sensitivity[1] - 0.99) < 0.005);
    CHECK(std::abs(c.sensitivity[2] - 0.98) < 0.005);
    CHECK(c.row_total(1) == 708);
    CHECK(c.row_total(2) == 1426);
    CHECK(c.row_total(3) == 930);
  }

  TEST_CASE("confusion corner cases") {
    std::vector<SliceEval> all_right, none;
    for (int l = 1; l <= 3; ++l) {
      SliceEval e;
      e.l_gt = l;
      e.l_p = l;
      all_right.push_back(e);
      e.l_p = kNonClassified;
      none.push_back(e);
    }
    const auto a = confusion(all_right);
    CHECK(a.accuracy == 1.0);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(a.matrix[r][c] == (r == c ? 1 : 0));
    const auto b = confusion(none);
    CHECK(b.accuracy == 0.0);
    CHECK(b.matrix[0][0] + b.matrix[1][1] + b.matrix[2][2] == 0);
  }

  TEST_CASE("metric oracle on random pairs") {
    const auto rep = test::run_metric_oracle(1000, 99);
    INFO(rep.first_failure);
    CHECK(rep.pairs == 1000);
    CHECK(rep.mismatches == 0);
  }

  TEST_CASE("dice identity and ranges on random masks") {
    Rng rng(5);
    int checked = 0;
    for (int n = 0; n < 500; ++n) {
      MaskRaster p(9, 9), t(9, 9);
      for (Index i = 0; i < 81; ++i) {
        p.data()[i] = static_cast<std::uint8_t>(rng.below(4));
        t.data()[i] = rng.bernoulli(0.5);
      }
      const int l = 1 + static_cast<int>(rng.below(3));
      const auto c = overlap_counts(p, t, l);
      const double d = dice(c), s = sensitivity(c), pt = pttas(c);
      for (double v : {d, s, pt}) CHECK((v >= 0.0 && v <= 1.0));
      if (c.true_positive + c.false_positive > 0 && c.true_positive + c.false_negative > 0 && c.true_positive > 0) {
        const double prec = static_cast<double>(c.true_positive) / static_cast<double>(c.true_positive + c.false_positive);
        CHECK(d == doctest::Approx(2 * prec * s / (prec + s)).epsilon(1e-12));
        ++checked;
      }
    }
    CHECK(checked > 400);
  }

  TEST_CASE("classification properties on random triples") {
    const auto p = test::run_classification_properties(10000, 7);
    CHECK(p.triples == 10000);
    CHECK(p.monotone_violations == 0);
    CHECK(p.majority_cases > 1000);
    CHECK(p.majority_violations == 0);
    CHECK(p.tau_one_classified == 0);
    CHECK(p.symmetry_violations == 0);
  }

  TEST_CASE("threshold sweep") {
    std::vector<std::pair<ClassScores, int>> scored{{test::scores_from_counts({9, 1, 0}), 1},
                                                    {test::scores_from_counts({0, 6, 4}), 3},
                                                    {test::scores_from_counts({0, 0, 0}), 2}};
    const auto rows = threshold_sweep(scored, {0.0, 0.5, 0.95});
    CHECK(rows[0].classified == 2);
    CHECK(rows[0].precision == doctest::Approx(1.0 / 3.0));
    CHECK(rows[1].classified == 2);
    CHECK(rows[2].classified == 0);
    CHECK(rows[2].precision == 0.0);
    CHECK(tau_grid(101)[50] == 0.5);
    CHECK(tau_grid(101).back() == 1.0);
    CHECK_THROWS_AS(tau_grid(1), ParameterError);
  }

  TEST_CASE("histograms") {
    const auto h = histogram({0.05, 0.55}, 10);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[5] == 1);
    const auto ones = histogram({1.0, 1.0, 1.0}, 10);
    CHECK(ones.counts[9] == 3);
    std::vector<SliceEval> evals(7);
    for (std::size_t i = 0; i < evals.size(); ++i) evals[i].dice = static_cast<double>(i) / 6.0;
    const auto m = metric_histograms(evals, 4);
    Index total = 0;
    for (auto c : m.dice.counts) total += c;
    CHECK(total == 7);
    CHECK(m.pttas.counts[0] == 7);
    CHECK_THROWS_AS(histogram({0.5}, 0), ParameterError);
  }

  TEST_CASE("report json and csv") {
    test::TempDir dir("report");
    std::vector<SliceEval> evals;
    Rng rng(3);
    for (int n = 0; n < 5; ++n) {
      MaskRaster p(6, 6), t(6, 6);
      for (Index i = 0; i < 36; ++i) {
        p.data()[i] = static_cast<std::uint8_t>(rng.below(4));
        t.data()[i] = rng.bernoulli(0.5);
      }
      evals.push_back(evaluate_slice("s" + std::to_string(n), p, t, 1 + n % 3, 0.3));
    }
    const auto rep = make_report(evals, 0.3);
    write_json(to_json(rep), dir / "report.json");
    const auto back = eval_report_from_json(read_json(dir / "report.json"));
    CHECK(back.tau == 0.3);
    CHECK(back.mean_dice == rep.mean_dice);
    CHECK(back.confusion.accuracy == rep.confusion.accuracy);
    REQUIRE(back.slices.size() == 5);
    CHECK(back.slices[2].scores.counts == rep.slices[2].scores.counts);

    write_histograms_csv(metric_histograms(evals, 10), dir / "h.csv");
    std::ifstream in(dir / "h.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "bin_lower,bin_upper,dice,sensitivity,pttas");
  }
}
