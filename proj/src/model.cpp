#include "bcgmil/model.hpp"

#include <cmath>
#include <string>

#include "bcgmil/error.hpp"

namespace bcgmil {

TrainingSet TrainingSet::from_bags(std::vector<Bag> bags, int dim) {
  if (dim <= 0) throw DataError("instance dimension must be positive");
  size_t total = 0;
  for (const Bag& bag : bags) {
    if (bag.instances.empty()) {
      throw DataError("bag " + std::to_string(bag.bag_id) + " is empty");
    }
    if (bag.label != 0 && bag.label != 1) {
      throw DataError("bag " + std::to_string(bag.bag_id) + " has a non-binary label");
    }
    total += bag.instances.size();
  }

  TrainingSet set;
  set.data_.resize(dim, static_cast<Eigen::Index>(total));
  set.positive_.reserve(total);
  set.bag_of_.reserve(total);
  Eigen::Index col = 0;
  for (size_t b = 0; b < bags.size(); ++b) {
    const Bag& bag = bags[b];
    for (size_t j = 0; j < bag.instances.size(); ++j) {
      const Vector& x = bag.instances[j].samples;
      if (x.size() != dim) {
        throw DataError("bag " + std::to_string(bag.bag_id) + " instance " +
                        std::to_string(j) + " has length " + std::to_string(x.size()) +
                        ", expected " + std::to_string(dim));
      }
      if (!x.allFinite()) {
        throw DataError("bag " + std::to_string(bag.bag_id) + " instance " +
                        std::to_string(j) + " has non-finite samples");
      }
      set.data_.col(col++) = x;
      set.positive_.push_back(static_cast<std::uint8_t>(bag.label));
      set.bag_of_.push_back(static_cast<int>(b));
      if (bag.label == 1) {
        ++set.n_pos_;
      } else {
        ++set.n_neg_;
      }
    }
  }
  set.mean_ = total > 0 ? Vector(set.data_.rowwise().mean()) : Vector::Zero(dim);
  set.bags_ = std::move(bags);
  return set;
}

void TrainingSet::require_both_labels() const {
  if (n_pos_ == 0) throw DataError("no positive bags");
  if (n_neg_ == 0) throw DataError("no negative bag instances");
}

ConceptModel::ConceptModel(Matrix concepts) : concepts_(std::move(concepts)) {
  if (concepts_.cols() < 1) throw DataError("concept model needs a target concept");
  if (!concepts_.allFinite()) throw NumericalError("concept model has non-finite entries");
}

ConceptModel::ConceptModel(const Vector& target, const std::vector<Vector>& background) {
  concepts_.resize(target.size(), static_cast<Eigen::Index>(background.size()) + 1);
  concepts_.col(0) = target;
  for (size_t k = 0; k < background.size(); ++k) {
    if (background[k].size() != target.size()) {
      throw DataError("background concept " + std::to_string(k) + " has length " +
                      std::to_string(background[k].size()) + ", expected " +
                      std::to_string(target.size()));
    }
    concepts_.col(static_cast<Eigen::Index>(k) + 1) = background[k];
  }
  if (!concepts_.allFinite()) throw NumericalError("concept model has non-finite entries");
}

bool ConceptModel::operator==(const ConceptModel& other) const {
  return concepts_.rows() == other.concepts_.rows() &&
         concepts_.cols() == other.concepts_.cols() && concepts_ == other.concepts_;
}

void ProportionMatrix::validate(const TrainingSet& set, double tol) const {
  if (rows_.rows() != set.size()) {
    throw NumericalError("proportion matrix has " + std::to_string(rows_.rows()) +
                         " rows for " + std::to_string(set.size()) + " instances");
  }
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    const auto row = rows_.row(i);
    if (!row.allFinite() || row.minCoeff() < 0.0 || std::abs(row.sum() - 1.0) > tol) {
      throw NumericalError("proportion row " + std::to_string(i) + " is off the simplex");
    }
    if (!set.in_positive_bag(static_cast<int>(i)) && row[0] != 0.0) {
      throw NumericalError("negative-bag row " + std::to_string(i) +
                           " carries target proportion");
    }
  }
}

void EMConfig::validate() const {
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("u must lie in (0, 1)");
  if (m_init < 1) throw ConfigError("m_init must be at least 1");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (!(conv_tol > 0.0)) throw ConfigError("conv_tol must be positive");
}

Vector reconstruct(std::span<const double> row, const ConceptModel& model, bool z) {
  const auto width = static_cast<size_t>(model.background_count()) + 1;
  if (row.size() != width) {
    throw DataError("proportion row has length " + std::to_string(row.size()) +
                    ", expected " + std::to_string(width) + " (index " +
                    std::to_string(std::min(row.size(), width)) + " unmatched)");
  }
  Vector out = Vector::Zero(model.dim());
  if (z) out += row[0] * model.target();
  for (size_t k = 1; k < width; ++k) {
    out += row[k] * model.concepts().col(static_cast<Eigen::Index>(k));
  }
  return out;
}

Vector instance_weights(const TrainingSet& set, double alpha) {
  if (set.positive_count() == 0) throw DataError("no positive bags");
  const double pos_weight = alpha * static_cast<double>(set.negative_count()) /
                            static_cast<double>(set.positive_count());
  Vector w(set.size());
  for (int i = 0; i < set.size(); ++i) w[i] = set.in_positive_bag(i) ? pos_weight : 1.0;
  return w;
}

Vector gamma_terms(const ProportionMatrix& p_prev, double gamma_scale) {
  constexpr double kMinColumnSum = 1e-12;
  const int m = p_prev.background_count();
  Vector gamma(m);
  for (int k = 0; k < m; ++k) {
    const double col_sum = p_prev.rows().col(k + 1).sum();
    gamma[k] = gamma_scale / std::max(col_sum, kMinColumnSum);
  }
  return gamma;
}

namespace {

void check_shapes(const TrainingSet& set, const ConceptModel& model,
                  const ProportionMatrix& p, const Vector& gamma) {
  if (model.dim() != set.dim()) {
    throw DataError("concept dimension " + std::to_string(model.dim()) +
                    " does not match instance dimension " + std::to_string(set.dim()));
  }
  if (p.size() != set.size() || p.background_count() != model.background_count()) {
    throw DataError("proportion matrix shape does not match the model");
  }
  if (gamma.size() != model.background_count()) {
    throw DataError("gamma has " + std::to_string(gamma.size()) + " entries, expected " +
                    std::to_string(model.background_count()));
  }
}

// Shrinkage and sparsity terms shared by both objectives.
void add_penalties(const ConceptModel& model, const ProportionMatrix& p,
                   const Vector& mu0, const EMConfig& cfg, const Vector& gamma,
                   ObjectiveTerms& terms) {
  const Matrix& e = model.concepts();
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    terms.shrinkage += 0.5 * cfg.u * (e.col(k) - mu0).squaredNorm();
  }
  if (!std::isfinite(terms.shrinkage)) throw NumericalError("shrinkage term is non-finite");
  for (int k = 0; k < model.background_count(); ++k) {
    terms.sparsity += gamma[k] * p.rows().col(k + 1).sum();
  }
  if (!std::isfinite(terms.sparsity)) throw NumericalError("sparsity term is non-finite");
}

}  // namespace

ObjectiveTerms expected_objective_terms(const TrainingSet& set,
                                        const ConceptModel& model,
                                        const ProportionMatrix& p,
                                        const Posterior& post,
                                        const EMConfig& cfg,
                                        const Vector& gamma) {
  check_shapes(set, model, p, gamma);
  if (post.size() != set.size()) throw DataError("posterior size does not match the data");
  const Vector w = instance_weights(set, cfg.alpha);
  const Matrix& x = set.data();
  const Matrix& e = model.concepts();
  const auto bg = model.background_block();

  ObjectiveTerms terms;
  const double half = 0.5 * (1.0 - cfg.u);
  for (int i = 0; i < set.size(); ++i) {
    const auto row = p.rows().row(i);
    const Vector background_part = bg * row.tail(row.size() - 1).transpose();
    const Vector r0 = x.col(i) - background_part;
    const double p1 = post.p_z1(i);
    double contrib = post.p_z0(i) * r0.squaredNorm();
    if (p1 != 0.0) contrib += p1 * (r0 - row[0] * e.col(0)).squaredNorm();
    terms.residual += half * w[i] * contrib;
    if (!std::isfinite(terms.residual)) {
      throw NumericalError("residual term is non-finite at instance " + std::to_string(i));
    }
  }
  add_penalties(model, p, set.mean(), cfg, gamma, terms);
  return terms;
}

double expected_objective(const TrainingSet& set, const ConceptModel& model,
                          const ProportionMatrix& p, const Posterior& post,
                          const EMConfig& cfg, const Vector& gamma) {
  return expected_objective_terms(set, model, p, post, cfg, gamma).total();
}

double complete_objective(const TrainingSet& set, const ConceptModel& model,
                          const ProportionMatrix& p, std::span<const std::uint8_t> z,
                          const EMConfig& cfg, const Vector& gamma) {
  check_shapes(set, model, p, gamma);
  if (z.size() != static_cast<size_t>(set.size())) {
    throw DataError("label vector size does not match the data");
  }
  const Vector w = instance_weights(set, cfg.alpha);
  ObjectiveTerms terms;
  for (int i = 0; i < set.size(); ++i) {
    const Vector r = set.data().col(i) -
                     reconstruct(p.row(i), model, z[static_cast<size_t>(i)] != 0);
    terms.residual += 0.5 * (1.0 - cfg.u) * w[i] * r.squaredNorm();
  }
  if (!std::isfinite(terms.residual)) throw NumericalError("residual term is non-finite");
  add_penalties(model, p, set.mean(), cfg, gamma, terms);
  return terms.total();
}

}  // namespace bcgmil
