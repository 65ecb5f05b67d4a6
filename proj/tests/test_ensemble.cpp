#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "adr/ensemble.hpp"
#include "adr/error.hpp"
#include "adr/rng.hpp"

using namespace adr;

namespace {

std::vector<int> bits(unsigned mask, int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1u;
  return v;
}

VoteRecord vote_one(const std::vector<int>& v, TieBreak t = TieBreak::positive) {
  return majority_vote({{"d", v}}, t).front();
}

}  // namespace

TEST_CASE("majority voting over every 10-model vote vector") {
  Rng rng(17);
  for (unsigned mask = 0; mask < 1024; ++mask) {
    const auto v = bits(mask, 10);
    const int ones = static_cast<int>(std::count(v.begin(), v.end(), 1));
    const auto r = vote_one(v);
    CAPTURE(mask);
    if (ones > 5) REQUIRE((r.final == 1 && !r.was_tie));
    if (ones < 5) REQUIRE((r.final == 0 && !r.was_tie));
    if (ones == 5) {
      REQUIRE(r.final == 1);
      REQUIRE(r.was_tie);
      REQUIRE(vote_one(v, TieBreak::negative).final == 0);
    }
    auto shuffled = v;
    rng.shuffle(std::span<int>(shuffled));
    const auto s = vote_one(shuffled);
    REQUIRE(s.final == r.final);
    REQUIRE(s.was_tie == r.was_tie);
    REQUIRE(r.votes == v);
  }
  CHECK(vote_one(std::vector<int>(10, 1)).final == 1);
  CHECK(vote_one(std::vector<int>(10, 0)).final == 0);
}

TEST_CASE("vote input validation") {
  CHECK_THROWS_AS(majority_vote({{"a", {1, 0}}, {"b", {1}}}), ArgumentError);
  CHECK_THROWS_AS(majority_vote({{"a", {}}}), ArgumentError);
  CHECK_THROWS_AS(majority_vote({{"a", {2, 0}}}), ValueError);
}

TEST_CASE("sample standard deviation oracles") {
  CHECK(std_dev(std::vector<double>{1, 2, 3, 4, 5}) == doctest::Approx(1.5811388300841898).epsilon(1e-12));
  CHECK(std_dev(std::vector<double>{0, 10}) == doctest::Approx(7.0710678118654755).epsilon(1e-12));
  CHECK(std_dev(std::vector<double>{3, 3, 3}) == 0.0);
  CHECK(mean(std::vector<double>{1, 2, 3, 4, 5}) == 3.0);
  CHECK_THROWS_AS(std_dev(std::vector<double>{1}), ArgumentError);
}

TEST_CASE("field-wise aggregation against a hand-computed oracle") {
  std::vector<MetricsReport> reports;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> v(MetricsReport::kFields);
    for (std::size_t f = 0; f < v.size(); ++f) v[f] = 10.0 * f + s * (f + 1);
    reports.push_back(MetricsReport::from_values(v));
  }
  const auto agg = aggregate(reports, {1, 2, 3, 4, 5});
  const auto m = agg.mean_report.values();
  const auto sd = agg.std_report.values();
  for (std::size_t f = 0; f < MetricsReport::kFields; ++f) {
    // values s*(f+1) for s=0..4: mean 2(f+1), sample variance 2.5(f+1)^2
    CHECK(std::abs(m[f] - (10.0 * f + 2.0 * (f + 1))) <= 1e-9);
    CHECK(std::abs(sd[f] - std::sqrt(2.5) * (f + 1)) <= 1e-9);
  }
  const auto same = aggregate(std::vector<MetricsReport>(5, reports[2]));
  for (double x : same.std_report.values()) CHECK(x == 0.0);
  CHECK_THROWS_AS(aggregate({reports[0]}), ArgumentError);
}

TEST_CASE("ensemble settings validation") {
  EnsembleSpec spec;
  CHECK(spec.model_seeds.size() == 10);
  CHECK_NOTHROW(spec.validate());
  spec.sampling_seeds = {1, 1};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.sampling_seeds = {1};
  spec.workers = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("votes csv round trip") {
  const auto votes = majority_vote({{"a", {1, 0, 1, 0}}, {"b", {0, 0, 0, 1}}});
  const auto csv = votes_csv(votes);
  CHECK(csv.find("true") != std::string::npos);
  CHECK(parse_votes_csv(csv) == votes);
}

TEST_CASE("voting aligned model predictions") {
  std::vector<std::vector<Prediction>> per_model = {
      {{"a", 1, 0.9}, {"b", 0, 0.1}}, {{"a", 1, 0.8}, {"b", 1, 0.6}}, {{"a", 0, 0.2}, {"b", 0, 0.3}}};
  const auto v = vote_predictions(per_model, TieBreak::positive);
  REQUIRE(v.size() == 2);
  CHECK(v[0].final == 1);
  CHECK(v[1].final == 0);
  per_model[2][1].doc_id = "c";
  CHECK_THROWS_AS(vote_predictions(per_model, TieBreak::positive), AlignmentError);
}

TEST_CASE("aggregate table rendering") {
  const auto r = report({8, 7, 13, 796});
  std::vector<ReportRow> rows{{"zero-shot", r, std::nullopt}, {"few", r, MetricsReport{}}};
  const auto csv = aggregate_csv(rows);
  CHECK(csv.find("scenario,P_0") != std::string::npos);
  CHECK(csv.find("0.533333 ± 0.000000") != std::string::npos);
  const auto md = aggregate_markdown(rows);
  CHECK(md.find("53.33 ± 0.00") != std::string::npos);
}
