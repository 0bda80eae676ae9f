#include "bcgmil/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bcgmil/error.hpp"

namespace bcgmil {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd project_to_simplex(const VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += sorted[static_cast<size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[static_cast<size_t>(j)] - candidate > 0.0) shift = candidate;
  }
  return (v.array() - shift).max(0.0).matrix();
}

double quadratic_value(const MatrixXd& h, const VectorXd& f, const VectorXd& x) {
  return 0.5 * x.dot(h * x) + f.dot(x);
}

VectorXd projected_gradient_simplex(const MatrixXd& h, const VectorXd& f,
                                    const VectorXd& start, double step_tol,
                                    int max_iters) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double lipschitz = eig.eigenvalues().size() > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
  if (!(lipschitz > 0.0)) {
    // Linear objective: the best vertex is optimal.
    Eigen::Index best = 0;
    f.minCoeff(&best);
    return VectorXd::Unit(f.size(), best);
  }
  VectorXd x = project_to_simplex(start);
  for (int it = 0; it < max_iters; ++it) {
    const VectorXd next = project_to_simplex(x - (h * x + f) / lipschitz);
    const double moved = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (moved < step_tol) break;
  }
  return x;
}

namespace {

VectorXd clean_simplex_point(VectorXd x) {
  x = x.cwiseMax(0.0);
  const double total = x.sum();
  if (total > 0.0) x /= total;
  return x;
}

// Columns span the feasible directions on the face where only `free` may be nonzero.
MatrixXd face_basis(const std::vector<Eigen::Index>& free, Eigen::Index n) {
  const auto m = static_cast<Eigen::Index>(free.size());
  MatrixXd z = MatrixXd::Zero(n, std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index c = 0; c + 1 < m; ++c) {
    z(free[static_cast<size_t>(c) + 1], c) = 1.0;
    z(free[0], c) = -1.0;
  }
  return z;
}

}  // namespace

SimplexQpResult solve_simplex_qp(const MatrixXd& h, const VectorXd& f,
                                 const VectorXd& start, int max_pivots) {
  const Eigen::Index n = f.size();
  if (h.rows() != n || h.cols() != n || start.size() != n || n == 0) {
    throw DataError("simplex QP dimensions are inconsistent");
  }

  const double scale = std::max({h.cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff(), 1.0});
  const double eig_tol = 1e-12 * scale;
  const double grad_tol = 1e-12 * scale;
  const double mult_tol = 1e-11 * scale;
  constexpr double kStepTol = 1e-14;

  VectorXd x = clean_simplex_point(start);
  const double start_value = quadratic_value(h, f, x);
  std::vector<bool> active(static_cast<size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    active[static_cast<size_t>(j)] = x[j] == 0.0;
  }

  SimplexQpResult result;
  bool converged = false;
  const int max_steps = 4 * max_pivots + 4 * static_cast<int>(n);
  for (int step = 0; step < max_steps && result.pivots <= max_pivots; ++step) {
    const VectorXd grad = h * x + f;
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!active[static_cast<size_t>(j)]) free.push_back(j);
    }
    const auto m = static_cast<Eigen::Index>(free.size());

    VectorXd direction = VectorXd::Zero(n);
    double max_step = 1.0;
    if (m >= 2) {
      const MatrixXd z = face_basis(free, n);
      const VectorXd gz = z.transpose() * grad;
      if (gz.lpNorm<Eigen::Infinity>() > grad_tol) {
        const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(z.transpose() * h * z);
        const VectorXd& lam = eig.eigenvalues();
        const MatrixXd& vecs = eig.eigenvectors();
        VectorXd flat = VectorXd::Zero(m - 1);
        VectorXd newton = VectorXd::Zero(m - 1);
        for (Eigen::Index c = 0; c < lam.size(); ++c) {
          const double coef = vecs.col(c).dot(gz);
          if (lam[c] <= eig_tol) {
            flat += coef * vecs.col(c);
          } else {
            newton += (coef / lam[c]) * vecs.col(c);
          }
        }
        if (flat.norm() > grad_tol) {
          // Zero-curvature descent ray; the simplex bounds it.
          direction = -(z * flat);
          max_step = std::numeric_limits<double>::infinity();
        } else {
          direction = -(z * newton);
        }
        // Round-off can leave a step that does not descend.
        if (grad.dot(direction) >= 0.0) direction.setZero();
      }
    }

    if (direction.lpNorm<Eigen::Infinity>() <= kStepTol) {
      // Stationary on this face: release the most negative multiplier, if any.
      double nu = 0.0;
      for (Eigen::Index j : free) nu += grad[j];
      nu /= static_cast<double>(m);
      Eigen::Index release = -1;
      double most_negative = -mult_tol;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!active[static_cast<size_t>(j)]) continue;
        const double multiplier = grad[j] - nu;
        if (multiplier < most_negative) {
          most_negative = multiplier;
          release = j;
        }
      }
      if (release < 0) {
        converged = true;
        break;
      }
      active[static_cast<size_t>(release)] = false;
      ++result.pivots;
      continue;
    }

    double alpha = max_step;
    Eigen::Index blocking = -1;
    for (Eigen::Index j : free) {
      if (direction[j] < 0.0) {
        const double limit = -x[j] / direction[j];
        if (limit < alpha) {
          alpha = limit;
          blocking = j;
        }
      }
    }
    if (!std::isfinite(alpha)) break;
    x += alpha * direction;
    if (blocking >= 0) {
      x[blocking] = 0.0;
      active[static_cast<size_t>(blocking)] = true;
      ++result.pivots;
    }
  }

  if (!converged) {
    warn("simplex QP active set did not settle; using projected gradient");
    x = projected_gradient_simplex(h, f, x);
    result.used_fallback = true;
  }

  x = clean_simplex_point(x);
  double value = quadratic_value(h, f, x);
  if (value > start_value) {
    x = clean_simplex_point(start);
    value = start_value;
  }
  result.x = std::move(x);
  result.objective = value;
  return result;
}

}  // namespace bcgmil
