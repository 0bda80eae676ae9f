#include "bcgmil/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "bcgmil/error.hpp"

namespace bcgmil {

BackgroundStats::BackgroundStats(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
    throw DataError("background covariance shape does not match its mean");
  }
  if (!(covariance_ - covariance_.transpose()).isZero(1e-12 * std::max(1.0, covariance_.cwiseAbs().maxCoeff()))) {
    throw NumericalError("background covariance is not symmetric");
  }
  llt_.compute(covariance_);
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("background covariance is not positive definite");
  }
}

BackgroundStats background_stats(std::span<const Instance> negatives) {
  if (negatives.empty()) throw DataError("background statistics need at least one instance");
  const auto d = negatives.front().samples.size();
  const auto n = static_cast<Eigen::Index>(negatives.size());
  Matrix data(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vector& x = negatives[static_cast<size_t>(j)].samples;
    if (x.size() != d) throw DataError("background instances differ in length");
    data.col(j) = x;
  }
  const Vector mean = data.rowwise().mean();
  const Matrix centered = data.colwise() - mean;
  Matrix cov = Matrix::Zero(d, d);
  if (n > 1) cov = (centered * centered.transpose()) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());

  const double trace = cov.trace();
  const double scale = n > d ? 1e-6 : 1e-3;
  const double ridge = trace > 0.0 ? scale * trace / static_cast<double>(d) : 1e-6;
  cov.diagonal().array() += ridge;
  return BackgroundStats(mean, std::move(cov));
}

double ace_score(const Vector& x, const Vector& target, const BackgroundStats& stats) {
  if (x.size() != stats.dim() || target.size() != stats.dim()) {
    throw DataError("ACE input of length " + std::to_string(x.size()) +
                    " does not match background dimension " + std::to_string(stats.dim()));
  }
  const Vector xc = x - stats.mean();
  const Vector sc = target - stats.mean();
  const Vector sw = stats.whiten_solve(sc);
  const double xx = xc.dot(stats.whiten_solve(xc));
  const double ss = sc.dot(sw);
  if (xx <= 0.0 || ss <= 0.0) return 0.0;
  const double sx = sw.dot(xc);
  return std::clamp(sx * sx / (ss * xx), 0.0, 1.0);
}

ConfidenceSeries score_instances(std::span<const Instance> instances, const Vector& target,
                                 const BackgroundStats& stats, int channels) {
  ConfidenceSeries series(static_cast<size_t>(std::max(channels, 0)));
  for (const Instance& inst : instances) {
    if (inst.channel < 0 || inst.channel >= channels) {
      throw DataError("instance channel " + std::to_string(inst.channel) + " out of range");
    }
    series[static_cast<size_t>(inst.channel)].push_back(
        {inst.peak_time, ace_score(inst.samples, target, stats)});
  }
  for (auto& ch : series) {
    std::stable_sort(ch.begin(), ch.end(),
                     [](const ScoredPeak& a, const ScoredPeak& b) { return a.time < b.time; });
  }
  return series;
}

std::vector<double> confirm_beats(const ConfidenceSeries& series, const VotingParams& params) {
  struct Vote {
    double time;
    int channel;
    double confidence;
  };
  std::vector<Vote> votes;
  for (size_t c = 0; c < series.size(); ++c) {
    for (const ScoredPeak& s : series[c]) {
      if (s.confidence > params.threshold) {
        votes.push_back({s.time, static_cast<int>(c), s.confidence});
      }
    }
  }
  std::sort(votes.begin(), votes.end(), [](const Vote& a, const Vote& b) {
    return std::tie(a.time, a.channel) < std::tie(b.time, b.channel);
  });

  std::vector<double> beats;
  std::vector<bool> used(votes.size(), false);
  std::vector<size_t> members;
  for (size_t a = 0; a < votes.size(); ++a) {
    if (used[a]) continue;
    members.assign(1, a);
    for (size_t j = a + 1; j < votes.size() && votes[j].time - votes[a].time <= params.window;
         ++j) {
      if (used[j]) continue;
      const bool seen = std::any_of(members.begin(), members.end(), [&](size_t m) {
        return votes[m].channel == votes[j].channel;
      });
      if (!seen) members.push_back(j);
    }
    if (static_cast<int>(members.size()) < params.min_votes) {
      used[a] = true;
      continue;
    }
    double weight = 0.0;
    double weighted_time = 0.0;
    for (size_t m : members) {
      used[m] = true;
      weight += votes[m].confidence;
      weighted_time += votes[m].confidence * votes[m].time;
    }
    const double t = weighted_time / weight;
    if (!beats.empty() && t - beats.back() < params.refractory) continue;
    beats.push_back(t);
  }
  return beats;
}

std::vector<RatePoint> heart_rate(std::span<const double> beats, double start, double end,
                                  double window, double step) {
  if (!(window > 0.0) || !(step > 0.0)) throw ConfigError("rate window and step must be positive");
  if (!(end > start)) throw DataError("rate span is empty");

  const auto count_in = [&](double lo, double hi) {
    return static_cast<double>(std::lower_bound(beats.begin(), beats.end(), hi) -
                               std::lower_bound(beats.begin(), beats.end(), lo));
  };
  std::vector<RatePoint> out;
  const double span = end - start;
  if (span < window) {
    warn("span of " + std::to_string(span) + " s is shorter than the rate window; " +
         "reporting one whole-span estimate");
    out.push_back({end, count_in(start, end) * 60.0 / span});
    return out;
  }
  const double eps = 1e-9 * std::max(1.0, std::abs(end));
  for (long k = 0;; ++k) {
    const double hi = start + window + static_cast<double>(k) * step;
    if (hi > end + eps) break;
    out.push_back({hi, count_in(hi - window, hi) * 60.0 / window});
  }
  return out;
}

}  // namespace bcgmil
