#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bcgmil/detector.hpp"

namespace bcgmil {

// Instance truthing used for ROC: an instance counts as a heartbeat when its
// peak lies within `halo` seconds of the nearest ground-truth beat.
std::vector<std::uint8_t> label_instances(std::span<const double> peak_times,
                                          std::span<const double> gt_beats,
                                          double halo = 0.25);

struct RocPoint {
  double threshold = 0.0;  // scores >= threshold are called positive
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, then by descending threshold
  double auc = 0.0;
};

// Threshold sweep over the unique scores; tied scores move together.
// Throws DataError unless both classes are present.
RocCurve roc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct RateErrorStats {
  double mean_abs_error = 0.0;  // beats/min
  double std_dev = 0.0;         // population standard deviation of |error|
  int n_windows = 0;
};

// Throws DataError if the two series are not on the same time grid.
RateErrorStats rate_error(std::span<const RatePoint> estimated,
                          std::span<const RatePoint> reference);

}  // namespace bcgmil
