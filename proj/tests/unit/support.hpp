#pragma once

#include <random>
#include <string>
#include <vector>

#include "bcgmil/error.hpp"
#include "bcgmil/model.hpp"

namespace test_support {

// Warnings raised by the library during the test run, in order.
std::vector<std::string>& captured_warnings();

// Counts warnings raised while alive.
class WarningCounter {
 public:
  WarningCounter() : start_(captured_warnings().size()) {}
  std::size_t count() const { return captured_warnings().size() - start_; }

 private:
  std::size_t start_;
};

inline bcgmil::Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  bcgmil::Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline bcgmil::Instance make_instance(const bcgmil::Vector& x, int channel = 0,
                                      double peak_time = 0.0) {
  bcgmil::Instance inst;
  inst.samples = x;
  inst.channel = channel;
  inst.peak_time = peak_time;
  return inst;
}

// Positive bags of `pos_size` random instances each, then one negative bag.
inline std::vector<bcgmil::Bag> random_bags(std::mt19937_64& rng, int d, int n_pos_bags,
                                            int pos_size, int n_neg) {
  std::vector<bcgmil::Bag> bags;
  int id = 0;
  for (int b = 0; b < n_pos_bags; ++b) {
    bcgmil::Bag bag;
    bag.label = 1;
    bag.bag_id = id++;
    for (int i = 0; i < pos_size; ++i) bag.instances.push_back(make_instance(random_vector(rng, d)));
    bags.push_back(std::move(bag));
  }
  bcgmil::Bag neg;
  neg.label = 0;
  neg.bag_id = id;
  for (int i = 0; i < n_neg; ++i) neg.instances.push_back(make_instance(random_vector(rng, d)));
  bags.push_back(std::move(neg));
  return bags;
}

// Random rows on the simplex; negative-bag rows get no target weight.
inline bcgmil::ProportionMatrix random_proportions(std::mt19937_64& rng,
                                                   const bcgmil::TrainingSet& set, int m) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  bcgmil::RowMatrix rows(set.size(), m + 1);
  for (int i = 0; i < set.size(); ++i) {
    for (int k = 0; k <= m; ++k) rows(i, k) = unit(rng);
    if (!set.in_positive_bag(i)) rows(i, 0) = 0.0;
    rows.row(i) /= rows.row(i).sum();
  }
  return bcgmil::ProportionMatrix(std::move(rows));
}

}  // namespace test_support
