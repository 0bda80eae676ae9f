#pragma once

// Domain types shared by the concept learner, and the pure evaluation of
// the mixing model and its objective.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace bcgmil {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kDefaultInstanceLength = 81;

// A windowed sub-segment centered on a detected peak.
struct Instance {
  Vector samples;
  int channel = 0;
  double peak_time = 0.0;  // seconds from recording start
  int source_id = 0;
};

struct Bag {
  std::vector<Instance> instances;
  int label = 0;  // 1 = contains at least one heartbeat instance
  int bag_id = 0;
};

// Flattened, validated view of a list of bags. Instance i is column i of
// data(); ordering follows bag order, then instance order within a bag.
class TrainingSet {
 public:
  // Throws DataError if a bag is empty, a length differs from `dim`, or a
  // sample is non-finite. Does not require both bag kinds to be present;
  // require_both_labels() does.
  static TrainingSet from_bags(std::vector<Bag> bags, int dim);

  const std::vector<Bag>& bags() const { return bags_; }
  const Matrix& data() const { return data_; }
  const Vector& mean() const { return mean_; }  // global data mean mu0

  int dim() const { return static_cast<int>(data_.rows()); }
  int size() const { return static_cast<int>(data_.cols()); }
  int positive_count() const { return n_pos_; }
  int negative_count() const { return n_neg_; }

  bool in_positive_bag(int i) const { return positive_[static_cast<size_t>(i)] != 0; }
  int bag_index(int i) const { return bag_of_[static_cast<size_t>(i)]; }

  void require_both_labels() const;

 private:
  std::vector<Bag> bags_;
  Matrix data_;
  Vector mean_;
  std::vector<std::uint8_t> positive_;
  std::vector<int> bag_of_;
  int n_pos_ = 0;
  int n_neg_ = 0;
};

// Column 0 is the target concept, columns 1..M the background concepts.
class ConceptModel {
 public:
  ConceptModel() = default;
  explicit ConceptModel(Matrix concepts);
  ConceptModel(const Vector& target, const std::vector<Vector>& background);

  const Matrix& concepts() const { return concepts_; }
  Eigen::Ref<const Vector> target() const { return concepts_.col(0); }
  Eigen::Ref<const Vector> background(int k) const { return concepts_.col(k + 1); }
  // Background concepts only, d x M.
  Eigen::Ref<const Matrix> background_block() const {
    return concepts_.rightCols(concepts_.cols() - 1);
  }

  int dim() const { return static_cast<int>(concepts_.rows()); }
  int background_count() const { return static_cast<int>(concepts_.cols()) - 1; }

  bool operator==(const ConceptModel& other) const;

 private:
  Matrix concepts_;
};

// Per-instance convex weights; column 0 holds p_iT.
class ProportionMatrix {
 public:
  ProportionMatrix() = default;
  explicit ProportionMatrix(RowMatrix rows) : rows_(std::move(rows)) {}

  const RowMatrix& rows() const { return rows_; }
  RowMatrix& rows() { return rows_; }
  std::span<const double> row(int i) const {
    return {rows_.row(i).data(), static_cast<size_t>(rows_.cols())};
  }
  int size() const { return static_cast<int>(rows_.rows()); }
  int background_count() const { return static_cast<int>(rows_.cols()) - 1; }

  // Throws NumericalError naming the first offending row if a row leaves the
  // simplex (tolerance `tol`) or a negative-bag row carries target weight.
  void validate(const TrainingSet& set, double tol = 1e-9) const;

 private:
  RowMatrix rows_;
};

// Stored as P(z_i = 0); P(z_i = 1) is derived so the pair sums to one exactly.
class Posterior {
 public:
  Posterior() = default;
  explicit Posterior(Vector p_z0) : p_z0_(std::move(p_z0)) {}

  double p_z0(int i) const { return p_z0_[i]; }
  double p_z1(int i) const { return 1.0 - p_z0_[i]; }
  int size() const { return static_cast<int>(p_z0_.size()); }
  const Vector& p_z0_vector() const { return p_z0_; }

 private:
  Vector p_z0_;
};

struct EMConfig {
  double u = 0.05;       // shrinkage toward the global mean
  int m_init = 3;        // initial number of background concepts
  double gamma = 0.1;    // sparsity scale
  double alpha = 1.5;    // positive-bag weight factor
  double beta = 5.0;     // E-step scale
  double tau = 1e-6;     // prune threshold
  int max_iters = 200;
  double conv_tol = 1e-6;
  std::uint64_t seed = 0;
  // When false, pruning never removes the last background concept.
  bool allow_empty_background = false;

  // Throws ConfigError on the first violated bound.
  void validate() const;
};

// Per-term breakdown of the expected objective.
struct ObjectiveTerms {
  double residual = 0.0;
  double shrinkage = 0.0;
  double sparsity = 0.0;
  double total() const { return residual + shrinkage + sparsity; }
};

// z * p_T * e_T + sum_k p_k e_k.
Vector reconstruct(std::span<const double> row, const ConceptModel& model, bool z);

// alpha * N_neg / N_pos on positive-bag instances, 1 elsewhere.
Vector instance_weights(const TrainingSet& set, double alpha);

// Gamma / column sum of the previous proportions, one entry per background
// concept. Column sums below 1e-12 are capped at 1e-12.
Vector gamma_terms(const ProportionMatrix& p_prev, double gamma_scale);

ObjectiveTerms expected_objective_terms(const TrainingSet& set,
                                        const ConceptModel& model,
                                        const ProportionMatrix& p,
                                        const Posterior& post,
                                        const EMConfig& cfg,
                                        const Vector& gamma);

double expected_objective(const TrainingSet& set, const ConceptModel& model,
                          const ProportionMatrix& p, const Posterior& post,
                          const EMConfig& cfg, const Vector& gamma);

// Complete-data objective for fixed instance labels z_i.
double complete_objective(const TrainingSet& set, const ConceptModel& model,
                          const ProportionMatrix& p,
                          std::span<const std::uint8_t> z, const EMConfig& cfg,
                          const Vector& gamma);

}  // namespace bcgmil
