#pragma once

// Small dense convex QPs over the probability simplex:
//
//   minimize 0.5 x'Hx + f'x   subject to   x >= 0, sum(x) = 1
//
// H must be symmetric positive semidefinite. Singular H is allowed.

#include <Eigen/Core>

namespace bcgmil {

struct SimplexQpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
  bool used_fallback = false;  // active set did not settle; projected gradient ran
};

// Euclidean projection onto the simplex (sort-based).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

double quadratic_value(const Eigen::MatrixXd& h, const Eigen::VectorXd& f,
                       const Eigen::VectorXd& x);

// Primal active-set method started from the feasible point `start`, so the
// returned objective never exceeds the objective at `start`. Falls back to
// projected gradient after `max_pivots` working-set changes.
SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& f,
                                 const Eigen::VectorXd& start, int max_pivots = 100);

// Projected gradient with a fixed 1/L step; stops once an iterate moves by
// less than `step_tol`. Exposed for tests.
Eigen::VectorXd projected_gradient_simplex(const Eigen::MatrixXd& h,
                                           const Eigen::VectorXd& f,
                                           const Eigen::VectorXd& start,
                                           double step_tol = 1e-10,
                                           int max_iters = 100000);

}  // namespace bcgmil
