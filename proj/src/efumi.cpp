#include "bcgmil/efumi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "bcgmil/error.hpp"
#include "bcgmil/simplex_qp.hpp"

namespace bcgmil {

Posterior e_step(const TrainingSet& set, const ConceptModel& model,
                 const ProportionMatrix& p, double beta) {
  if (p.size() != set.size() || p.background_count() != model.background_count()) {
    throw DataError("proportion matrix shape does not match the model");
  }
  const auto bg = model.background_block();
  Vector p_z0(set.size());
  for (int i = 0; i < set.size(); ++i) {
    if (!set.in_positive_bag(i)) {
      p_z0[i] = 1.0;
      continue;
    }
    const auto row = p.rows().row(i);
    const double residual =
        (set.data().col(i) - bg * row.tail(row.size() - 1).transpose()).squaredNorm();
    // exp underflows to exactly 0 for large residuals.
    p_z0[i] = std::exp(-beta * residual);
  }
  return Posterior(std::move(p_z0));
}

ConceptModel m_step_concepts(const TrainingSet& set, const ProportionMatrix& p,
                             const Posterior& post, const EMConfig& cfg) {
  const int k = p.background_count() + 1;
  const int d = set.dim();
  const Vector w = instance_weights(set, cfg.alpha);

  // Stationarity: E * gram = rhs, one shared (M+1)x(M+1) system for all rows of E.
  Matrix gram = cfg.u * Matrix::Identity(k, k);
  Matrix rhs = cfg.u * set.mean() * Eigen::RowVectorXd::Ones(k);
  Vector a1(k);
  Vector a0(k);
  for (int i = 0; i < set.size(); ++i) {
    a1 = p.rows().row(i).transpose();
    a0 = a1;
    a0[0] = 0.0;
    const double c1 = (1.0 - cfg.u) * w[i] * post.p_z1(i);
    const double c0 = (1.0 - cfg.u) * w[i] * post.p_z0(i);
    gram.noalias() += c1 * a1 * a1.transpose() + c0 * a0 * a0.transpose();
    rhs.noalias() += set.data().col(i) * (c1 * a1 + c0 * a0).transpose();
  }

  Eigen::LLT<Matrix> llt(gram);
  const double trace = gram.trace();
  const double min_pivot = llt.info() == Eigen::Success
                               ? Matrix(llt.matrixL()).diagonal().minCoeff()
                               : 0.0;
  if (llt.info() != Eigen::Success || min_pivot * min_pivot <= 1e-14 * trace) {
    warn("concept Gram matrix is singular; adding ridge 1e-10 * trace");
    gram.diagonal().array() += 1e-10 * std::max(trace, 1e-300);
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("concept Gram matrix is not positive definite after ridge");
    }
  }
  Matrix concepts = llt.solve(rhs.transpose()).transpose();
  if (concepts.rows() != d || !concepts.allFinite()) {
    throw NumericalError("concept update produced non-finite values");
  }
  return ConceptModel(std::move(concepts));
}

ProportionMatrix m_step_proportions(const TrainingSet& set, const ConceptModel& model,
                                    const Posterior& post, const ProportionMatrix& p_prev,
                                    const EMConfig& cfg) {
  return m_step_proportions(set, model, post, p_prev, cfg, gamma_terms(p_prev, cfg.gamma));
}

ProportionMatrix m_step_proportions(const TrainingSet& set, const ConceptModel& model,
                                    const Posterior& post, const ProportionMatrix& p_prev,
                                    const EMConfig& cfg, const Vector& gamma) {
  const int m = model.background_count();
  const int k = m + 1;
  if (p_prev.size() != set.size() || p_prev.background_count() != m) {
    throw DataError("previous proportions do not match the model");
  }
  if (gamma.size() != m) throw DataError("gamma size does not match the model");
  if (model.dim() != set.dim()) throw DataError("concept dimension does not match the data");

  const Vector w = instance_weights(set, cfg.alpha);
  const Matrix& e = model.concepts();
  const Matrix gram = e.transpose() * e;
  Matrix gram_masked = gram;  // target row and column removed (z = 0 residual)
  gram_masked.row(0).setZero();
  gram_masked.col(0).setZero();
  Vector penalty = Vector::Zero(k);
  penalty.tail(m) = gamma;

  RowMatrix rows = p_prev.rows();
  int fallbacks = 0;
  for (int i = 0; i < set.size(); ++i) {
    const Vector ex = e.transpose() * set.data().col(i);
    const double c = (1.0 - cfg.u) * w[i];
    SimplexQpResult qp;
    if (set.in_positive_bag(i)) {
      const double p1 = post.p_z1(i);
      const double p0 = post.p_z0(i);
      Vector ex_masked = ex;
      ex_masked[0] = 0.0;
      const Matrix h = c * (p1 * gram + p0 * gram_masked);
      const Vector f = -c * (p1 * ex + p0 * ex_masked) + penalty;
      qp = solve_simplex_qp(h, f, rows.row(i).transpose());
      rows.row(i) = qp.x.transpose();
    } else {
      if (m == 0) throw NumericalError("negative-bag instance with no background concepts");
      const Matrix h = c * gram.bottomRightCorner(m, m);
      const Vector f = -c * ex.tail(m) + gamma;
      qp = solve_simplex_qp(h, f, rows.row(i).tail(m).transpose());
      rows(i, 0) = 0.0;
      rows.row(i).tail(m) = qp.x.transpose();
    }
    if (qp.used_fallback) ++fallbacks;
  }
  if (fallbacks > 0) {
    warn(std::to_string(fallbacks) + " proportion rows needed the projected-gradient fallback");
  }
  return ProportionMatrix(std::move(rows));
}

PruneResult prune(const ConceptModel& model, const ProportionMatrix& p, double tau,
                  bool allow_empty) {
  if (!(tau > 0.0)) throw ConfigError("prune threshold must be positive");
  const int m = model.background_count();
  std::vector<int> keep;
  std::vector<int> removed;
  for (int k = 0; k < m; ++k) {
    if (p.rows().col(k + 1).maxCoeff() <= tau) {
      removed.push_back(k);
    } else {
      keep.push_back(k);
    }
  }
  if (keep.empty() && m > 0 && !allow_empty) {
    int best = 0;
    for (int k = 1; k < m; ++k) {
      if (p.rows().col(k + 1).sum() > p.rows().col(best + 1).sum()) best = k;
    }
    warn("pruning would remove every background concept; keeping concept " +
         std::to_string(best));
    keep.push_back(best);
    removed.erase(std::find(removed.begin(), removed.end(), best));
  }
  if (removed.empty()) return {model, p, {}};

  const auto kept = static_cast<Eigen::Index>(keep.size());
  Matrix concepts(model.dim(), kept + 1);
  RowMatrix rows(p.size(), kept + 1);
  concepts.col(0) = model.target();
  rows.col(0) = p.rows().col(0);
  for (Eigen::Index j = 0; j < kept; ++j) {
    const int src = keep[static_cast<size_t>(j)] + 1;
    concepts.col(j + 1) = model.concepts().col(src);
    rows.col(j + 1) = p.rows().col(src);
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double total = rows.row(i).sum();
    if (total > 0.0) rows.row(i) /= total;
  }
  return {ConceptModel(std::move(concepts)), ProportionMatrix(std::move(rows)),
          std::move(removed)};
}

namespace {

// Lloyd iterations from seeded random centers. Ties go to the lower index.
std::vector<Vector> seeded_kmeans(const std::vector<Vector>& points, int clusters,
                                  std::mt19937_64& rng, int iterations) {
  const auto n = points.size();
  std::vector<Vector> centers;
  centers.reserve(static_cast<size_t>(clusters));
  if (n >= static_cast<size_t>(clusters)) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    for (int c = 0; c < clusters; ++c) {
      std::uniform_int_distribution<size_t> pick(static_cast<size_t>(c), n - 1);
      std::swap(order[static_cast<size_t>(c)], order[pick(rng)]);
      centers.push_back(points[order[static_cast<size_t>(c)]]);
    }
  } else {
    warn("fewer negative instances than background concepts; sampling with replacement");
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    for (int c = 0; c < clusters; ++c) centers.push_back(points[pick(rng)]);
  }

  std::vector<int> assignment(n, 0);
  for (int it = 0; it < iterations; ++it) {
    for (size_t i = 0; i < n; ++i) {
      double best = (points[i] - centers[0]).squaredNorm();
      int best_c = 0;
      for (int c = 1; c < clusters; ++c) {
        const double dist = (points[i] - centers[static_cast<size_t>(c)]).squaredNorm();
        if (dist < best) {
          best = dist;
          best_c = c;
        }
      }
      assignment[i] = best_c;
    }
    for (int c = 0; c < clusters; ++c) {
      Vector sum = Vector::Zero(points.front().size());
      int count = 0;
      for (size_t i = 0; i < n; ++i) {
        if (assignment[i] == c) {
          sum += points[i];
          ++count;
        }
      }
      // An empty cluster keeps its previous center.
      if (count > 0) centers[static_cast<size_t>(c)] = sum / static_cast<double>(count);
    }
  }
  return centers;
}

}  // namespace

Initialization initialize(const TrainingSet& set, const EMConfig& cfg) {
  set.require_both_labels();
  if (cfg.m_init < 1) throw ConfigError("m_init must be at least 1");
  const int d = set.dim();
  Vector pos_sum = Vector::Zero(d);
  Vector neg_sum = Vector::Zero(d);
  std::vector<Vector> negatives;
  negatives.reserve(static_cast<size_t>(set.negative_count()));
  for (int i = 0; i < set.size(); ++i) {
    if (set.in_positive_bag(i)) {
      pos_sum += set.data().col(i);
    } else {
      neg_sum += set.data().col(i);
      negatives.emplace_back(set.data().col(i));
    }
  }
  const Vector target = set.mean() + pos_sum / set.positive_count() -
                        neg_sum / set.negative_count();

  std::mt19937_64 rng(cfg.seed);
  const std::vector<Vector> background = seeded_kmeans(negatives, cfg.m_init, rng, 10);

  const int k = cfg.m_init + 1;
  RowMatrix rows(set.size(), k);
  for (int i = 0; i < set.size(); ++i) {
    if (set.in_positive_bag(i)) {
      rows.row(i).setConstant(1.0 / k);
    } else {
      rows(i, 0) = 0.0;
      rows.row(i).tail(cfg.m_init).setConstant(1.0 / cfg.m_init);
    }
  }
  ConceptModel model(target, background);
  const ProportionMatrix uniform(std::move(rows));
  // Uniform rows give every background concept the same normal equations, so
  // the first concept update would merge the k-means centroids.
  const Posterior post = e_step(set, model, uniform, cfg.beta);
  ProportionMatrix p = m_step_proportions(set, model, post, uniform, cfg);
  return {std::move(model), std::move(p)};
}

FitResult fit(const TrainingSet& set, const EMConfig& cfg) {
  cfg.validate();
  set.require_both_labels();
  Initialization init = initialize(set, cfg);

  FitResult result;
  result.model = std::move(init.model);
  result.p = std::move(init.p);

  const auto exceeds = [](double after, double before) {
    return after > before + 1e-9 * std::max(1.0, std::abs(before));
  };

  for (int t = 1; t <= cfg.max_iters; ++t) {
    const Posterior post = e_step(set, result.model, result.p, cfg.beta);
    const Vector gamma = gamma_terms(result.p, cfg.gamma);

    const double before = expected_objective(set, result.model, result.p, post, cfg, gamma);
    ConceptModel concepts = m_step_concepts(set, result.p, post, cfg);
    const double after_concepts = expected_objective(set, concepts, result.p, post, cfg, gamma);
    ProportionMatrix p = m_step_proportions(set, concepts, post, result.p, cfg, gamma);
    const double after_props = expected_objective(set, concepts, p, post, cfg, gamma);
    if (!std::isfinite(after_props)) {
      throw NumericalError("expected objective became non-finite at iteration " +
                           std::to_string(t));
    }
    if (exceeds(after_concepts, before)) ++result.monotonicity_violations;
    if (exceeds(after_props, after_concepts)) ++result.monotonicity_violations;
    result.objective_trace.push_back(after_props);

    const double change = (concepts.concepts() - result.model.concepts()).norm() /
                          std::max(result.model.concepts().norm(), 1e-300);

    PruneResult pruned = prune(concepts, p, cfg.tau, cfg.allow_empty_background);
    for (int k : pruned.removed) result.pruned_history.push_back({t, k});
    result.model = std::move(pruned.model);
    result.p = std::move(pruned.p);
    result.iterations = t;

    if (result.model.background_count() == 0 && set.negative_count() > 0) {
      throw NumericalError("pruning removed every background concept at iteration " +
                           std::to_string(t));
    }
    if (pruned.removed.empty() && change < cfg.conv_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace bcgmil
