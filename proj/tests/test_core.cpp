#include <doctest.h>

#include <Eigen/Core>

#include <random>
#include <stdexcept>
#include <vector>

#include "cep/core.hpp"
#include "cep/rng.hpp"
#include "cep/scores.hpp"

using namespace cep;

namespace {

ScoreVector make_scores(std::initializer_list<double> values) {
  Eigen::ArrayXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return ScoreVector(std::move(v));
}

LabelScoreRow make_row(std::initializer_list<double> values) {
  Eigen::ArrayXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return LabelScoreRow(std::move(v));
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("e-value of a test score against calibration scores") {
  ScoreVector calib = make_scores({1.0, 2.0, 3.0});
  CHECK(e_value(4.0, calib).value == 1.6);  // 4 * 4 / 10
  CHECK(e_value(2.0, calib).value == 1.0);  // 2 * 4 / 8
  CHECK(e_value(5.0, ScoreVector{}).value == 1.0);
  CHECK_THROWS_AS(e_value(0.0, calib), std::invalid_argument);
  CHECK_THROWS_AS(e_value(-1.0, calib), std::invalid_argument);
}

TEST_CASE("leave-one-out e-values average to exactly one") {
  RngFactory rng(20240817);
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    SplitMix64 r = rng.stream(trial);
    std::uniform_real_distribution<double> unif(0.1, 10.0);
    std::uniform_int_distribution<int> len(2, 8);
    int n_plus_1 = len(r);
    Eigen::ArrayXd values(n_plus_1);
    for (int i = 0; i < n_plus_1; ++i) values(i) = unif(r);
    double mean = 0.0;
    for (int i = 0; i < n_plus_1; ++i) {
      Eigen::ArrayXd rest(n_plus_1 - 1);
      Eigen::Index k = 0;
      for (int j = 0; j < n_plus_1; ++j)
        if (j != i) rest(k++) = values(j);
      mean += e_value(values(i), ScoreVector(std::move(rest))).value;
    }
    mean /= n_plus_1;
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("e-values are scale invariant") {
  RngFactory rng(7);
  SplitMix64 r = rng.stream(0);
  std::uniform_real_distribution<double> unif(0.1, 10.0);
  Eigen::ArrayXd base(6);
  for (Eigen::Index i = 0; i < 6; ++i) base(i) = unif(r);
  double test = unif(r);
  double e0 = e_value(test, ScoreVector(base)).value;
  for (double c : {0.25, 3.0, 1e6}) {
    double ec = e_value(c * test, ScoreVector(Eigen::ArrayXd(c * base))).value;
    CHECK(ec == doctest::Approx(e0).epsilon(1e-12));
  }
}

TEST_CASE("rank p-variable") {
  ScoreVector calib = make_scores({1.0, 2.0, 3.0});
  CHECK(p_value_rank(2.5, calib).value == 0.5);   // one score above
  CHECK(p_value_rank(0.5, calib).value == 1.0);   // all scores above
  CHECK(p_value_rank(4.0, calib).value == 0.25);  // none above
  CHECK(p_value_rank(2.0, calib).value == 0.5);   // ties don't count as above
  CHECK(p_value_rank(9.0, ScoreVector{}).value == 1.0);
}

TEST_CASE("mean of e-values") {
  std::vector<EValue> values{EValue{1.6}, EValue{0.4}};
  CHECK(mean_e(values).value == 1.0);
  std::vector<EValue> single{EValue{0.0}};
  CHECK(mean_e(single).value == 0.0);
  std::vector<EValue> bad{EValue{-0.5}};
  CHECK_THROWS_AS(mean_e(bad), std::invalid_argument);
  CHECK_THROWS_AS(mean_e(std::vector<EValue>{}), std::invalid_argument);
}

TEST_CASE("e-set threshold closed form") {
  ScoreVector calib = make_scores({1.0, 2.0, 3.0});
  Threshold t = e_set_threshold(calib, 0.5);  // (n+1)alpha = 2 -> 6 / 1
  REQUIRE(t.is_finite());
  CHECK(t.value() == 6.0);
  CHECK(t.contains_strict(5.999999));
  CHECK_FALSE(t.contains_strict(6.0));

  CHECK(e_set_threshold(calib, 0.2).is_unbounded());   // (n+1)alpha = 0.8 <= 1
  CHECK(e_set_threshold(calib, 0.25).is_unbounded());  // exactly 1, snapped
  CHECK(e_set_threshold(ScoreVector{}, 0.5).is_unbounded());

  CHECK_THROWS_AS(e_set_threshold(calib, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(e_set_threshold(calib, 1.0), std::invalid_argument);
}

TEST_CASE("e-set threshold scales with the data") {
  ScoreVector calib = make_scores({0.7, 1.3, 2.9, 4.4});
  double alpha = 0.6;
  Threshold t = e_set_threshold(calib, alpha);
  REQUIRE(t.is_finite());
  Eigen::ArrayXd scaled = calib.values() * 17.0;
  Threshold ts = e_set_threshold(ScoreVector(std::move(scaled)), alpha);
  REQUIRE(ts.is_finite());
  CHECK(ts.value() == doctest::Approx(17.0 * t.value()).epsilon(1e-12));
}

TEST_CASE("threshold membership matches the raw e-value inequality") {
  RngFactory rng(99);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    SplitMix64 r = rng.stream(trial);
    std::uniform_real_distribution<double> unif(0.1, 10.0);
    std::uniform_int_distribution<int> len(1, 20);
    std::uniform_real_distribution<double> alpha_draw(0.05, 0.95);
    int n = len(r);
    Eigen::ArrayXd values(n);
    for (int i = 0; i < n; ++i) values(i) = unif(r);
    ScoreVector calib{std::move(values)};
    double alpha = alpha_draw(r);
    Threshold t = e_set_threshold(calib, alpha);
    for (int j = 0; j < 20; ++j) {
      double s = unif(r);
      bool direct = e_value(s, calib).value < 1.0 / alpha;
      CHECK(t.contains_strict(s) == direct);
    }
  }
}

TEST_CASE("label set from a threshold") {
  LabelScoreRow row = make_row({0.5, 5.0, 7.0});
  CHECK(label_set_from_threshold(row, Threshold::finite(6.0)) == std::vector<int>{0, 1});
  CHECK(label_set_from_threshold(row, Threshold::finite(5.0)) == std::vector<int>{0});  // strict
  CHECK(label_set_from_threshold(row, Threshold::unbounded()) == std::vector<int>{0, 1, 2});
  CHECK(label_set_from_threshold(row, Threshold::empty()).empty());
}

}  // TEST_SUITE
