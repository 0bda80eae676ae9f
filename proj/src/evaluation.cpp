#include "bcgmil/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bcgmil/error.hpp"

namespace bcgmil {

std::vector<std::uint8_t> label_instances(std::span<const double> peak_times,
                                          std::span<const double> gt_beats, double halo) {
  std::vector<std::uint8_t> labels(peak_times.size(), 0);
  if (gt_beats.empty()) return labels;
  for (size_t i = 0; i < peak_times.size(); ++i) {
    const double t = peak_times[i];
    const auto it = std::lower_bound(gt_beats.begin(), gt_beats.end(), t);
    double nearest = std::numeric_limits<double>::infinity();
    if (it != gt_beats.end()) nearest = *it - t;
    if (it != gt_beats.begin()) nearest = std::min(nearest, t - *(it - 1));
    labels[i] = nearest <= halo ? 1 : 0;
  }
  return labels;
}

RocCurve roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  const auto positives =
      static_cast<double>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw DataError("ROC needs both positive and negative labels");
  }

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  double tp = 0.0;
  double fp = 0.0;
  for (size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      if (labels[order[i]] != 0) {
        tp += 1.0;
      } else {
        fp += 1.0;
      }
    }
    const RocPoint& prev = curve.points.back();
    const RocPoint next{threshold, fp / negatives, tp / positives};
    curve.auc += 0.5 * (next.fpr - prev.fpr) * (next.tpr + prev.tpr);
    curve.points.push_back(next);
  }
  return curve;
}

RateErrorStats rate_error(std::span<const RatePoint> estimated,
                          std::span<const RatePoint> reference) {
  if (estimated.size() != reference.size()) {
    throw DataError("rate series have " + std::to_string(estimated.size()) + " and " +
                    std::to_string(reference.size()) + " windows");
  }
  RateErrorStats stats;
  stats.n_windows = static_cast<int>(estimated.size());
  if (estimated.empty()) return stats;
  std::vector<double> errors(estimated.size());
  for (size_t i = 0; i < estimated.size(); ++i) {
    if (std::abs(estimated[i].time - reference[i].time) > 1e-6) {
      throw DataError("rate series grids differ at window " + std::to_string(i));
    }
    errors[i] = std::abs(estimated[i].bpm - reference[i].bpm);
  }
  const double n = static_cast<double>(errors.size());
  stats.mean_abs_error = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double var = 0.0;
  for (double e : errors) var += (e - stats.mean_abs_error) * (e - stats.mean_abs_error);
  stats.std_dev = std::sqrt(var / n);
  return stats;
}

}  // namespace bcgmil
