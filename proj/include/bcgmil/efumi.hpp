#pragma once

// Concept learning from bag-labeled instances by expectation maximization
// over a convex mixing model with a target concept and a prunable set of
// background concepts.

#include <utility>
#include <vector>

#include "bcgmil/model.hpp"

namespace bcgmil {

struct PruneEvent {
  int iteration = 0;
  int concept_index = 0;  // background index at the time of removal
};

struct FitResult {
  ConceptModel model;
  ProportionMatrix p;
  std::vector<double> objective_trace;  // expected objective after each iteration
  int iterations = 0;
  std::vector<PruneEvent> pruned_history;
  bool converged = false;
  // Count of M-steps that raised the expected objective beyond 1e-9 relative slack.
  int monotonicity_violations = 0;
};

struct PruneResult {
  ConceptModel model;
  ProportionMatrix p;
  std::vector<int> removed;  // background indices in the input model
};

struct Initialization {
  ConceptModel model;
  ProportionMatrix p;
};

// P(z_i = 0) is exp(-beta * ||x_i - sum_k p_ik e_k||^2) for positive-bag
// instances and exactly 1 for negative-bag instances.
Posterior e_step(const TrainingSet& set, const ConceptModel& model,
                 const ProportionMatrix& p, double beta);

// Exact minimizer of the expected objective over all concepts with the
// proportions, posteriors and weights held fixed.
ConceptModel m_step_concepts(const TrainingSet& set, const ProportionMatrix& p,
                             const Posterior& post, const EMConfig& cfg);

// Per-instance simplex QP, warm started from `p_prev`. The sparsity weights
// are computed from `p_prev`.
ProportionMatrix m_step_proportions(const TrainingSet& set, const ConceptModel& model,
                                    const Posterior& post, const ProportionMatrix& p_prev,
                                    const EMConfig& cfg);

// Same, with explicit sparsity weights.
ProportionMatrix m_step_proportions(const TrainingSet& set, const ConceptModel& model,
                                    const Posterior& post, const ProportionMatrix& p_prev,
                                    const EMConfig& cfg, const Vector& gamma);

// Removes background concepts whose largest proportion is <= tau and
// renormalizes the remaining rows. Never removes the target. Unless
// `allow_empty` is set, the most-used concept survives when all would go.
PruneResult prune(const ConceptModel& model, const ProportionMatrix& p, double tau,
                  bool allow_empty = false);

// Target = mu0 + (positive mean - negative mean); background concepts from
// seeded k-means on the negative instances. Proportions are one proportion
// update against those concepts, started from uniform rows (p_T = 0 on
// negative bags).
Initialization initialize(const TrainingSet& set, const EMConfig& cfg);

FitResult fit(const TrainingSet& set, const EMConfig& cfg);

}  // namespace bcgmil
