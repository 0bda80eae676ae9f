#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "support.hpp"

#include "bcgmil/evaluation.hpp"

using namespace bcgmil;

namespace {

// Mann-Whitney statistic over all positive/negative pairs; ties count half.
double pair_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0.0, pairs = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 0) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_CASE("halo labels") {
  const std::vector<double> gt{1.0, 5.0};
  const std::vector<double> peaks{1.0, 3.0, 5.25, 4.7, 0.74, 9.0};
  const auto labels = label_instances(peaks, gt, 0.25);
  CHECK(labels == std::vector<std::uint8_t>{1, 0, 1, 0, 0, 0});
  CHECK(label_instances(peaks, std::vector<double>{}, 0.25) == std::vector<std::uint8_t>(6, 0));
}

TEST_CASE("halo labels match a brute-force nearest-beat scan") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 100.0);
  std::vector<double> gt;
  for (double t = 0.4; t < 100.0; t += 0.85) gt.push_back(t);
  std::vector<double> peaks(500);
  for (double& p : peaks) p = unit(rng);
  const auto labels = label_instances(peaks, gt, 0.25);
  for (size_t i = 0; i < peaks.size(); ++i) {
    double best = 1e9;
    for (double b : gt) best = std::min(best, std::abs(peaks[i] - b));
    CHECK(labels[i] == (best <= 0.25 ? 1 : 0));
  }
}

TEST_CASE("ROC of separated and tied scores") {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.1};
  const std::vector<std::uint8_t> y{1, 1, 0, 0};
  const RocCurve c = roc(s, y);
  CHECK(c.auc == 1.0);
  CHECK(c.points.front().fpr == 0.0);
  CHECK(c.points.front().tpr == 0.0);
  CHECK(c.points.back().fpr == 1.0);
  CHECK(c.points.back().tpr == 1.0);

  const std::vector<double> tied(4, 0.5);
  const RocCurve flat = roc(tied, y);
  CHECK(flat.auc == doctest::Approx(0.5));
  CHECK(flat.points.size() == 2);
}

TEST_CASE("ROC errors") {
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(roc(s, std::vector<std::uint8_t>{1, 1}), DataError);
  CHECK_THROWS_AS(roc(s, std::vector<std::uint8_t>{1}), DataError);
}

TEST_CASE("ROC AUC equals the pairwise statistic") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(50);
    std::vector<std::uint8_t> y(50);
    for (size_t i = 0; i < 50; ++i) {
      y[i] = coin(rng) ? 1 : 0;
      // Rounding creates ties.
      s[i] = std::round((normal(rng) + 0.8 * y[i]) * 4.0) / 4.0;
    }
    y[0] = 1;
    y[1] = 0;
    const RocCurve c = roc(s, y);
    CHECK(std::abs(c.auc - pair_auc(s, y)) <= 1e-10);
    CHECK(c.auc >= 0.0);
    CHECK(c.auc <= 1.0);
    for (size_t i = 1; i < c.points.size(); ++i) {
      CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
      CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
    }
  }
}

TEST_CASE("ROC AUC is invariant under strictly monotone transforms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> s(200);
  std::vector<std::uint8_t> y(200);
  for (size_t i = 0; i < s.size(); ++i) {
    y[i] = i % 3 == 0 ? 1 : 0;
    s[i] = normal(rng) + y[i];
  }
  const double base = roc(s, y).auc;
  std::vector<double> t1(s.size()), t2(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    t1[i] = std::exp(3.0 * s[i]);
    t2[i] = std::atan(s[i]) * 5.0 - 2.0;
  }
  CHECK(roc(t1, y).auc == doctest::Approx(base).epsilon(1e-14));
  CHECK(roc(t2, y).auc == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("ROC of uninformative scores is near chance") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s(5000);
  std::vector<std::uint8_t> y(5000);
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = unit(rng);
    y[i] = unit(rng) < 0.3 ? 1 : 0;
  }
  CHECK(std::abs(roc(s, y).auc - 0.5) <= 0.05);
}

TEST_CASE("rate error statistics") {
  std::vector<RatePoint> ref, same, plus2;
  for (int k = 0; k < 10; ++k) {
    ref.push_back({60.0 + k, 70.0 + k % 3});
    plus2.push_back({60.0 + k, 72.0 + k % 3});
  }
  same = ref;
  const RateErrorStats zero = rate_error(same, ref);
  CHECK(zero.mean_abs_error == 0.0);
  CHECK(zero.std_dev == 0.0);
  CHECK(zero.n_windows == 10);

  const RateErrorStats two = rate_error(plus2, ref);
  CHECK(two.mean_abs_error == doctest::Approx(2.0));
  CHECK(two.std_dev == doctest::Approx(0.0));

  std::vector<RatePoint> a{{1.0, 60.0}, {2.0, 64.0}};
  std::vector<RatePoint> b{{1.0, 61.0}, {2.0, 61.0}};
  const RateErrorStats ab = rate_error(a, b);
  CHECK(ab.mean_abs_error == doctest::Approx(2.0));
  CHECK(ab.std_dev == doctest::Approx(1.0));
  CHECK(rate_error(b, a).mean_abs_error == ab.mean_abs_error);
}

TEST_CASE("rate error is symmetric") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(70.0, 5.0);
  std::vector<RatePoint> a, b;
  for (int k = 0; k < 100; ++k) {
    a.push_back({60.0 + k, normal(rng)});
    b.push_back({60.0 + k, normal(rng)});
  }
  const RateErrorStats ab = rate_error(a, b), ba = rate_error(b, a);
  CHECK(ab.mean_abs_error == ba.mean_abs_error);
  CHECK(ab.std_dev == ba.std_dev);
  CHECK(ab.mean_abs_error >= 0.0);
  CHECK(ab.std_dev >= 0.0);
}

TEST_CASE("rate error rejects mismatched grids") {
  std::vector<RatePoint> a{{1.0, 60.0}, {2.0, 60.0}};
  std::vector<RatePoint> b{{1.0, 60.0}};
  std::vector<RatePoint> c{{1.0, 60.0}, {2.5, 60.0}};
  CHECK_THROWS_AS(rate_error(a, b), DataError);
  CHECK_THROWS_AS(rate_error(a, c), DataError);
}
