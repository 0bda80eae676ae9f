#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "support.hpp"

#include "bcgmil/model.hpp"

using namespace bcgmil;
using test_support::make_instance;
using test_support::random_bags;
using test_support::random_proportions;
using test_support::random_vector;

namespace {

ConceptModel random_model(std::mt19937_64& rng, int d, int m) {
  return ConceptModel(Matrix(Matrix::NullaryExpr(d, m + 1, [&](Eigen::Index, Eigen::Index) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  })));
}

Posterior random_posterior(std::mt19937_64& rng, const TrainingSet& set) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector p0(set.size());
  for (int i = 0; i < set.size(); ++i) p0[i] = set.in_positive_bag(i) ? unit(rng) : 1.0;
  return Posterior(p0);
}

// Term-by-term summation written directly from the objective's definition.
double objective_oracle(const TrainingSet& set, const ConceptModel& model,
                        const ProportionMatrix& p, const Posterior& post, const EMConfig& cfg,
                        const Vector& gamma) {
  const int n = set.size();
  const int d = set.dim();
  const int m = model.background_count();
  double n_pos = 0, n_neg = 0;
  for (int i = 0; i < n; ++i) (set.in_positive_bag(i) ? n_pos : n_neg) += 1.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = set.in_positive_bag(i) ? cfg.alpha * n_neg / n_pos : 1.0;
    for (int z = 0; z <= 1; ++z) {
      const double pz = z == 1 ? 1.0 - post.p_z0(i) : post.p_z0(i);
      double sq = 0.0;
      for (int j = 0; j < d; ++j) {
        double r = set.data()(j, i);
        if (z == 1) r -= p.rows()(i, 0) * model.concepts()(j, 0);
        for (int k = 1; k <= m; ++k) r -= p.rows()(i, k) * model.concepts()(j, k);
        sq += r * r;
      }
      total += pz * w * 0.5 * (1.0 - cfg.u) * sq;
    }
  }
  for (int k = 0; k <= m; ++k) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      double mean = 0.0;
      for (int i = 0; i < n; ++i) mean += set.data()(j, i);
      mean /= n;
      const double diff = model.concepts()(j, k) - mean;
      sq += diff * diff;
    }
    total += 0.5 * cfg.u * sq;
  }
  for (int k = 1; k <= m; ++k) {
    for (int i = 0; i < n; ++i) total += gamma[k - 1] * p.rows()(i, k);
  }
  return total;
}

}  // namespace

TEST_CASE("reconstruct evaluates the gated convex combination") {
  const ConceptModel model(Vector::Constant(3, 1.5), {Vector::Constant(3, -1.0), Vector::Zero(3)});
  const std::vector<double> vertex{1.0, 0.0, 0.0};
  CHECK(reconstruct(vertex, model, true) == Vector::Constant(3, 1.5));
  CHECK(reconstruct(vertex, model, false) == Vector::Zero(3));

  Vector et(2), e1(2);
  et << 2.0, 0.0;
  e1 << 0.0, 2.0;
  const ConceptModel small(et, {e1});
  const std::vector<double> half{0.5, 0.5};
  const Vector r = reconstruct(half, small, true);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 1.0);
}

TEST_CASE("reconstruct rejects a row of the wrong width") {
  const ConceptModel model(Vector::Zero(2), {Vector::Zero(2)});
  const std::vector<double> row{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(reconstruct(row, model, true), DataError);
}

TEST_CASE("reconstruct is linear in the proportion row") {
  std::mt19937_64 rng(11);
  const ConceptModel model = random_model(rng, 5, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector a = random_vector(rng, 4);
    const Vector b = random_vector(rng, 4);
    const double s = std::normal_distribution<double>(0.0, 2.0)(rng);
    const double t = std::normal_distribution<double>(0.0, 2.0)(rng);
    const Vector mix = s * a + t * b;
    for (bool z : {false, true}) {
      const Vector lhs = reconstruct({mix.data(), 4}, model, z);
      const Vector rhs =
          s * reconstruct({a.data(), 4}, model, z) + t * reconstruct({b.data(), 4}, model, z);
      CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("instance weights scale positive-bag points") {
  std::mt19937_64 rng(1);
  // 60 positive instances, 300 negative.
  const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 2, 20, 3, 300), 2);
  const Vector w = instance_weights(set, 1.5);
  for (int i = 0; i < set.size(); ++i) {
    CHECK(w[i] == doctest::Approx(set.in_positive_bag(i) ? 7.5 : 1.0).epsilon(1e-15));
  }

  const TrainingSet even = TrainingSet::from_bags(random_bags(rng, 2, 2, 5, 10), 2);
  const Vector w2 = instance_weights(even, 1.5);
  CHECK(w2[0] == 1.5);
  CHECK(w2[even.size() - 1] == 1.0);
}

TEST_CASE("instance weights need a positive bag") {
  std::mt19937_64 rng(2);
  auto bags = random_bags(rng, 2, 0, 0, 4);
  const TrainingSet set = TrainingSet::from_bags(bags, 2);
  CHECK_THROWS_AS(instance_weights(set, 1.5), DataError);
  CHECK_THROWS_AS(set.require_both_labels(), DataError);
}

TEST_CASE("gamma terms divide the scale by the previous column sums") {
  RowMatrix rows(4, 3);
  rows << 0.0, 0.5, 0.5,  //
      0.0, 1.0, 0.0,      //
      0.2, 0.8, 0.0,      //
      0.0, 1.0, 0.0;
  const ProportionMatrix p(rows);
  const Vector g = gamma_terms(p, 0.1);
  CHECK(g[0] == doctest::Approx(0.1 / 3.3).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(0.1 / 0.5).epsilon(1e-14));

  RowMatrix ten = RowMatrix::Zero(10, 2);
  ten.col(1).setOnes();
  CHECK(gamma_terms(ProportionMatrix(ten), 0.1)[0] == doctest::Approx(0.01));
  CHECK(gamma_terms(ProportionMatrix(ten), 0.0)[0] == 0.0);

  RowMatrix dead = RowMatrix::Zero(3, 3);
  dead.col(1).setOnes();
  const Vector capped = gamma_terms(ProportionMatrix(dead), 0.1);
  CHECK(capped[1] == doctest::Approx(0.1 / 1e-12));
}

TEST_CASE("training set bookkeeping") {
  std::mt19937_64 rng(3);
  const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 4, 3, 4, 7), 4);
  CHECK(set.size() == 19);
  CHECK(set.positive_count() == 12);
  CHECK(set.negative_count() == 7);
  CHECK(set.positive_count() + set.negative_count() == set.size());
  const Vector mean = set.data().rowwise().mean();
  CHECK((set.mean() - mean).norm() <= 1e-12 * std::max(1.0, mean.norm()));
  CHECK(set.bag_index(0) == 0);
  CHECK(set.bag_index(set.size() - 1) == 3);
}

TEST_CASE("training set validation errors") {
  std::vector<Bag> empty_bag(1);
  CHECK_THROWS_AS(TrainingSet::from_bags(empty_bag, 2), DataError);

  std::vector<Bag> wrong_len(1);
  wrong_len[0].instances.push_back(make_instance(Vector::Zero(3)));
  CHECK_THROWS_AS(TrainingSet::from_bags(wrong_len, 2), DataError);

  std::vector<Bag> nan_bag(1);
  Vector bad = Vector::Zero(2);
  bad[1] = std::nan("");
  nan_bag[0].instances.push_back(make_instance(bad));
  CHECK_THROWS_AS(TrainingSet::from_bags(nan_bag, 2), DataError);

  std::vector<Bag> bad_label(1);
  bad_label[0].label = 2;
  bad_label[0].instances.push_back(make_instance(Vector::Zero(2)));
  CHECK_THROWS_AS(TrainingSet::from_bags(bad_label, 2), DataError);
}

TEST_CASE("concept model rejects non-finite or mismatched concepts") {
  Vector nan = Vector::Zero(2);
  nan[0] = std::nan("");
  CHECK_THROWS_AS(ConceptModel(nan, {Vector::Zero(2)}), NumericalError);
  CHECK_THROWS_AS(ConceptModel(Vector::Zero(2), {Vector::Zero(3)}), DataError);
}

TEST_CASE("proportion matrix validation") {
  std::mt19937_64 rng(4);
  const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 2, 1, 2, 2), 2);
  RowMatrix rows(4, 2);
  rows << 0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0;
  CHECK_NOTHROW(ProportionMatrix(rows).validate(set));

  RowMatrix off = rows;
  off(0, 1) = 0.6;
  CHECK_THROWS_AS(ProportionMatrix(off).validate(set), NumericalError);

  RowMatrix negative = rows;
  negative(1, 0) = 1.2;
  negative(1, 1) = -0.2;
  CHECK_THROWS_AS(ProportionMatrix(negative).validate(set), NumericalError);

  RowMatrix target_on_negative = rows;
  target_on_negative(2, 0) = 0.5;
  target_on_negative(2, 1) = 0.5;
  CHECK_THROWS_AS(ProportionMatrix(target_on_negative).validate(set), NumericalError);
}

TEST_CASE("em config bounds") {
  EMConfig cfg;
  CHECK(cfg.u == 0.05);
  CHECK(cfg.m_init == 3);
  CHECK(cfg.gamma == 0.1);
  CHECK(cfg.alpha == 1.5);
  CHECK(cfg.beta == 5.0);
  CHECK(cfg.tau == 1e-6);
  CHECK_NOTHROW(cfg.validate());

  auto rejects = [](auto mutate) {
    EMConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  rejects([](EMConfig& c) { c.u = 0.0; });
  rejects([](EMConfig& c) { c.u = 1.0; });
  rejects([](EMConfig& c) { c.gamma = -0.1; });
  rejects([](EMConfig& c) { c.alpha = 0.0; });
  rejects([](EMConfig& c) { c.beta = -1.0; });
  rejects([](EMConfig& c) { c.tau = 0.0; });
  rejects([](EMConfig& c) { c.tau = 1.0; });
  rejects([](EMConfig& c) { c.m_init = 0; });
}

TEST_CASE("posterior pairs sum to one exactly") {
  const Posterior post(Vector::LinSpaced(7, 0.0, 1.0));
  for (int i = 0; i < post.size(); ++i) CHECK(post.p_z0(i) + post.p_z1(i) == 1.0);
}

TEST_CASE("objective vanishes when everything sits at the mean") {
  std::vector<Bag> bags(2);
  const Vector mu = Vector::Constant(3, 0.7);
  bags[0].label = 1;
  bags[0].instances = {make_instance(mu), make_instance(mu)};
  bags[1].label = 0;
  bags[1].instances = {make_instance(mu)};
  const TrainingSet set = TrainingSet::from_bags(bags, 3);
  const ConceptModel model(mu, {mu, mu});
  RowMatrix rows(3, 3);
  rows << 0.2, 0.3, 0.5, 1.0, 0.0, 0.0, 0.0, 0.5, 0.5;
  EMConfig cfg;
  cfg.gamma = 0.0;
  // Positive rows reconstruct mu only with the target switched on.
  Vector p0(3);
  p0 << 0.0, 0.0, 1.0;
  CHECK(expected_objective(set, model, ProportionMatrix(rows), Posterior(p0), cfg,
                           Vector::Zero(2)) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("objective is zero for one negative instance matched by its concept") {
  std::vector<Bag> bags(2);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  bags[0].label = 1;
  bags[0].instances = {make_instance(x)};
  bags[1].label = 0;
  bags[1].instances = {make_instance(x)};
  const TrainingSet set = TrainingSet::from_bags(bags, 3);
  RowMatrix rows(2, 2);
  rows << 0.0, 1.0, 0.0, 1.0;
  EMConfig cfg;
  cfg.gamma = 0.0;
  const double value = expected_objective(set, ConceptModel(x, {x}), ProportionMatrix(rows),
                                          Posterior(Vector::Ones(2)), cfg, Vector::Zero(1));
  CHECK(value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("objective matches an independent re-summation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 4, 2, 2, 2), 4);
    REQUIRE(set.size() == 6);
    const ConceptModel model = random_model(rng, 4, 2);
    const ProportionMatrix p = random_proportions(rng, set, 2);
    const Posterior post = random_posterior(rng, set);
    EMConfig cfg;
    cfg.u = 0.2;
    const Vector gamma = gamma_terms(random_proportions(rng, set, 2), 0.3);
    const double got = expected_objective(set, model, p, post, cfg, gamma);
    const double want = objective_oracle(set, model, p, post, cfg, gamma);
    CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    const ObjectiveTerms terms = expected_objective_terms(set, model, p, post, cfg, gamma);
    CHECK(terms.total() == doctest::Approx(got).epsilon(1e-14));
  }
}

TEST_CASE("objective is non-negative for non-negative sparsity") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 3, 3, 2, 4), 3);
    const ConceptModel model = random_model(rng, 3, 2);
    const ProportionMatrix p = random_proportions(rng, set, 2);
    EMConfig cfg;
    const Vector gamma = gamma_terms(p, cfg.gamma);
    CHECK(expected_objective(set, model, p, random_posterior(rng, set), cfg, gamma) >= 0.0);
  }
}

TEST_CASE("hard posteriors reduce the expected objective to the complete-data objective") {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 3, 2, 3, 4), 3);
    const ConceptModel model = random_model(rng, 3, 2);
    const ProportionMatrix p = random_proportions(rng, set, 2);
    std::vector<std::uint8_t> z(static_cast<size_t>(set.size()));
    Vector p0(set.size());
    for (int i = 0; i < set.size(); ++i) {
      z[static_cast<size_t>(i)] = set.in_positive_bag(i) && coin(rng) ? 1 : 0;
      p0[i] = z[static_cast<size_t>(i)] != 0 ? 0.0 : 1.0;
    }
    EMConfig cfg;
    const Vector gamma = gamma_terms(p, cfg.gamma);
    const double expected = expected_objective(set, model, p, Posterior(p0), cfg, gamma);
    const double complete = complete_objective(set, model, p, z, cfg, gamma);
    CHECK(std::abs(expected - complete) <= 1e-10 * std::max(1.0, complete));
  }
}

TEST_CASE("objective shape errors") {
  std::mt19937_64 rng(8);
  const TrainingSet set = TrainingSet::from_bags(random_bags(rng, 3, 1, 2, 2), 3);
  const ConceptModel model = random_model(rng, 3, 2);
  const ProportionMatrix p = random_proportions(rng, set, 2);
  const Posterior post(Vector::Ones(set.size()));
  EMConfig cfg;
  CHECK_THROWS_AS(expected_objective(set, model, p, post, cfg, Vector::Zero(1)), DataError);
  CHECK_THROWS_AS(expected_objective(set, random_model(rng, 4, 2), p, post, cfg, Vector::Zero(2)),
                  DataError);
  CHECK_THROWS_AS(expected_objective(set, model, p, Posterior(Vector::Ones(2)), cfg,
                                     Vector::Zero(2)),
                  DataError);
  const std::vector<std::uint8_t> short_z(2, 0);
  CHECK_THROWS_AS(complete_objective(set, model, p, short_z, cfg, Vector::Zero(2)), DataError);
}
