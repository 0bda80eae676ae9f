#pragma once

// Scoring against a learned target concept, cross-transducer beat
// confirmation, and sliding-window heart rate.

#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "bcgmil/model.hpp"

namespace bcgmil {

// Mean and ridge-regularized covariance of background (non-heartbeat)
// instances, with a cached Cholesky factor of the covariance.
class BackgroundStats {
 public:
  BackgroundStats() = default;
  // Throws NumericalError if `covariance` is not symmetric positive definite.
  BackgroundStats(Vector mean, Matrix covariance);

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  // Sigma^{-1} v
  Vector whiten_solve(const Vector& v) const { return llt_.solve(v); }

 private:
  Vector mean_;
  Matrix covariance_;
  Eigen::LLT<Matrix> llt_;
};

// Sample mean and covariance (divisor n - 1; n = 1 gives a zero covariance)
// plus ridge lambda * I with lambda = 1e-6 * trace / d, raised to
// 1e-3 * trace / d when there are no more instances than dimensions. A zero
// trace falls back to lambda = 1e-6.
BackgroundStats background_stats(std::span<const Instance> negatives);

// Squared cosine between whitened (x - mean) and whitened (target - mean).
// Returns 0 when x equals the background mean.
double ace_score(const Vector& x, const Vector& target, const BackgroundStats& stats);

struct ScoredPeak {
  double time = 0.0;
  double confidence = 0.0;
};

// Per-channel confidences, each list sorted by time.
using ConfidenceSeries = std::vector<std::vector<ScoredPeak>>;

// Scores every instance; instances are grouped by channel.
ConfidenceSeries score_instances(std::span<const Instance> instances, const Vector& target,
                                 const BackgroundStats& stats, int channels);

struct VotingParams {
  double threshold = 0.28;
  double window = 0.03;  // seconds; members pairwise within this distance
  int min_votes = 2;     // distinct channels
  double refractory = 0.25;  // minimum gap between confirmed beats, seconds
};

// Greedy left-to-right clustering of super-threshold scores. The earliest
// unused score anchors a cluster holding, per channel, the earliest unused
// score within `window` of the anchor. A cluster with at least `min_votes`
// channels confirms one beat at its confidence-weighted mean time, unless
// that falls within the refractory gap of the previous beat. Cluster members
// are consumed either way; an unconfirmed anchor is consumed alone.
std::vector<double> confirm_beats(const ConfidenceSeries& series,
                                  const VotingParams& params = {});

struct RatePoint {
  double time = 0.0;  // window end, seconds
  double bpm = 0.0;
};

// Beats per minute over sliding windows [end - window, end) whose ends run
// from start + window to `end` in steps of `step`. A span shorter than the
// window yields one whole-span estimate at `end` (with a warning).
std::vector<RatePoint> heart_rate(std::span<const double> beats, double start, double end,
                                  double window = 60.0, double step = 1.0);

}  // namespace bcgmil
