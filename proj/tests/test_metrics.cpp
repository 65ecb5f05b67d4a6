#include <doctest.h>

#include <cmath>

#include "adr/error.hpp"
#include "adr/metrics.hpp"
#include "adr/rng.hpp"

using namespace adr;

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace

TEST_CASE("report on the reference confusion counts") {
  const auto r = report({8, 7, 13, 796});
  CHECK(round2(r.p1) == doctest::Approx(53.33));
  CHECK(round2(r.r1) == doctest::Approx(38.10));
  CHECK(round2(r.f1_1) == doctest::Approx(44.44));
  CHECK(round2(r.r0) == doctest::Approx(99.13));
  CHECK(r.flags == 0);
}

TEST_CASE("confusion counts from label vectors") {
  const std::vector<int> p{1, 1, 0, 0, 1};
  const std::vector<int> g{1, 0, 1, 0, 1};
  const auto cm = confusion(p, g);
  CHECK(cm == ConfusionMatrix{2, 1, 1, 1});
  CHECK_THROWS_AS(confusion(std::vector<int>{1}, g), AlignmentError);
  CHECK_THROWS_AS(confusion(std::vector<int>{2}, std::vector<int>{1}), ValueError);
}

TEST_CASE("hard AUC equals macro recall against a brute-force oracle") {
  Rng rng(20240601);
  for (int i = 0; i < 10000; ++i) {
    ConfusionMatrix cm{rng.below(200), rng.below(200), rng.below(200), rng.below(5000)};
    if (cm.tp + cm.fn == 0) cm.fn = 1;
    if (cm.tn + cm.fp == 0) cm.tn = 1;
    const double tpr = double(cm.tp) / double(cm.tp + cm.fn);
    const double tnr = double(cm.tn) / double(cm.tn + cm.fp);
    const double oracle = 100.0 * (tpr + tnr) / 2.0;
    const auto r = report(cm);
    REQUIRE(std::abs(auc_hard(cm) - oracle) <= 1e-12);
    REQUIRE(r.auc == r.r_macro);
  }
}

TEST_CASE("zero denominators are reported as zero and flagged") {
  const auto r = report({0, 0, 5, 10});
  CHECK(r.p1 == 0.0);
  CHECK(r.f1_1 == 0.0);
  CHECK((r.flags & MetricsReport::p1_undefined) != 0);
  CHECK_THROWS_AS(auc_hard({0, 0, 0, 10}), UndefinedMetricError);
}

TEST_CASE("macro values are unweighted means of the class values") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    ConfusionMatrix cm{rng.below(50) + 1, rng.below(50) + 1, rng.below(50) + 1, rng.below(500) + 1};
    const auto r = report(cm);
    CHECK(r.p_macro == doctest::Approx((r.p0 + r.p1) / 2).epsilon(1e-12));
    CHECK(r.f1_macro == doctest::Approx((r.f1_0 + r.f1_1) / 2).epsilon(1e-12));
    for (double v : r.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }
  }
}

TEST_CASE("values round-trip") {
  const auto r = report({3, 4, 5, 60});
  const auto v = r.values();
  REQUIRE(v.size() == MetricsReport::kFields);
  const auto back = MetricsReport::from_values(v);
  CHECK(back.values() == v);
  CHECK(MetricsReport::field_names().front() == "P_0");
  CHECK(MetricsReport::field_names().back() == "AUC");
}

TEST_CASE("score-based ROC AUC") {
  const std::vector<int> gold{0, 0, 1, 1};
  CHECK(roc_auc_scores(std::vector<double>{0.1, 0.4, 0.35, 0.8}, gold) == doctest::Approx(75.0));
  CHECK(roc_auc_scores(std::vector<double>{0.5, 0.5, 0.5, 0.5}, gold) == doctest::Approx(50.0));
  CHECK(roc_auc_scores(std::vector<double>{0.1, 0.2, 0.3, 0.4}, gold) == doctest::Approx(100.0));
}

TEST_CASE("report rendering") {
  const auto r = report({8, 7, 13, 796});
  const auto csv = report_csv(r);
  CHECK(csv.find("P_0,R_0,F1_0,P_1,R_1,F1_1,P_m,R_m,F1_m,AUC") != std::string::npos);
  CHECK(csv.find("0.533333") != std::string::npos);
  CHECK(report_markdown(r).find("53.33") != std::string::npos);
}
