#include "bcgmil/signal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <string>
#include <tuple>

#include "bcgmil/error.hpp"

namespace bcgmil {

using cplx = std::complex<double>;

void Recording::validate() const {
  if (!(sample_rate > 0.0)) throw DataError("sample rate must be positive");
  if (channels.empty()) throw DataError("recording has no channels");
  for (size_t c = 1; c < channels.size(); ++c) {
    if (channels[c].size() != channels.front().size()) {
      throw DataError("channel " + std::to_string(c) + " length differs from channel 0");
    }
  }
  const double end = duration();
  for (size_t i = 0; i < gt_beats.size(); ++i) {
    if (!(gt_beats[i] >= 0.0 && gt_beats[i] <= end)) {
      throw DataError("ground-truth beat " + std::to_string(i) + " lies outside the recording");
    }
    if (i > 0 && !(gt_beats[i] > gt_beats[i - 1])) {
      throw DataError("ground-truth beats are not strictly increasing at index " +
                      std::to_string(i));
    }
  }
}

BandpassFilter BandpassFilter::butterworth(double low_hz, double high_hz,
                                           double sample_rate, int prototype_order) {
  const double nyquist = 0.5 * sample_rate;
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz)) {
    throw ConfigError("band-pass cutoffs must satisfy 0 < low < high");
  }
  if (high_hz >= nyquist) throw ConfigError("band-pass upper cutoff must be below Nyquist");
  if (prototype_order < 1) throw ConfigError("filter order must be positive");

  const double fs2 = 2.0 * sample_rate;
  const double w_lo = fs2 * std::tan(std::numbers::pi * low_hz / sample_rate);
  const double w_hi = fs2 * std::tan(std::numbers::pi * high_hz / sample_rate);
  const double w0_sq = w_lo * w_hi;
  const double bw = w_hi - w_lo;

  std::vector<cplx> upper;  // digital poles with positive imaginary part
  std::vector<double> real_poles;
  for (int k = 0; k < prototype_order; ++k) {
    const double theta =
        std::numbers::pi * (2.0 * k + prototype_order + 1) / (2.0 * prototype_order);
    const cplx proto = std::polar(1.0, theta);
    const cplx root = std::sqrt(proto * proto * bw * bw - 4.0 * w0_sq);
    for (const cplx s : {(proto * bw + root) / 2.0, (proto * bw - root) / 2.0}) {
      const cplx z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) < 1e-12) {
        real_poles.push_back(z.real());
      } else if (z.imag() > 0.0) {
        upper.push_back(z);
      }
    }
  }
  std::sort(real_poles.begin(), real_poles.end());

  BandpassFilter filter;
  filter.sample_rate_ = sample_rate;
  // Each section carries one zero at z = 1 and one at z = -1.
  for (const cplx& z : upper) {
    filter.sections_.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  }
  for (size_t j = 0; j + 1 < real_poles.size(); j += 2) {
    const double p = real_poles[j];
    const double q = real_poles[j + 1];
    filter.sections_.push_back({1.0, 0.0, -1.0, -(p + q), p * q});
  }

  const double center_hz =
      std::atan(std::sqrt(w0_sq) / fs2) * sample_rate / std::numbers::pi;
  const double gain = 1.0 / filter.magnitude(center_hz);
  Biquad& first = filter.sections_.front();
  first.b0 *= gain;
  first.b1 *= gain;
  first.b2 *= gain;
  return filter;
}

std::vector<double> BandpassFilter::apply(std::span<const double> signal) const {
  std::vector<double> out(signal.begin(), signal.end());
  for (const Biquad& s : sections_) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : out) {
      const double x = v;
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      v = y;
    }
  }
  return out;
}

cplx BandpassFilter::response(double freq_hz) const {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_);
  cplx h = 1.0;
  for (const Biquad& s : sections_) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
         (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

std::vector<double> bandpass(std::span<const double> signal, double sample_rate,
                             double low_hz, double high_hz) {
  return BandpassFilter::butterworth(low_hz, high_hz, sample_rate).apply(signal);
}

Recording filter_recording(const Recording& recording, double low_hz, double high_hz) {
  const BandpassFilter filter =
      BandpassFilter::butterworth(low_hz, high_hz, recording.sample_rate);
  Recording out;
  out.sample_rate = recording.sample_rate;
  out.gt_beats = recording.gt_beats;
  out.channels.reserve(recording.channels.size());
  for (const auto& ch : recording.channels) out.channels.push_back(filter.apply(ch));
  return out;
}

std::vector<size_t> detect_peaks(std::span<const double> filtered) {
  std::vector<size_t> peaks;
  for (size_t m = 1; m + 1 < filtered.size(); ++m) {
    if (filtered[m - 1] < filtered[m] && filtered[m] >= filtered[m + 1]) peaks.push_back(m);
  }
  return peaks;
}

PeakList find_peaks(const Recording& filtered) {
  PeakList peaks(filtered.channels.size());
  for (size_t c = 0; c < filtered.channels.size(); ++c) {
    for (size_t m : detect_peaks(filtered.channels[c])) {
      peaks[c].push_back({m, static_cast<double>(m) / filtered.sample_rate});
    }
  }
  return peaks;
}

PeakList restrict_peaks(const PeakList& peaks, double start, double end) {
  PeakList out(peaks.size());
  for (size_t c = 0; c < peaks.size(); ++c) {
    for (const Peak& p : peaks[c]) {
      if (p.time >= start && p.time < end) out[c].push_back(p);
    }
  }
  return out;
}

std::vector<Instance> extract_instances(const Recording& filtered, const PeakList& peaks,
                                        int dim, int source_id) {
  if (dim < 1 || dim % 2 == 0) throw ConfigError("instance length must be odd");
  if (peaks.size() > filtered.channels.size()) {
    throw DataError("peak list has more channels than the recording");
  }
  const auto half = static_cast<size_t>(dim / 2);
  std::vector<Instance> out;
  for (size_t c = 0; c < peaks.size(); ++c) {
    const auto& signal = filtered.channels[c];
    for (const Peak& p : peaks[c]) {
      if (p.index < half || p.index + half >= signal.size()) continue;
      Instance inst;
      inst.samples = Eigen::Map<const Vector>(signal.data() + (p.index - half), dim);
      inst.channel = static_cast<int>(c);
      inst.peak_time = p.time;
      inst.source_id = source_id;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

void normalize_instances(std::vector<Instance>& instances) {
  for (Instance& inst : instances) {
    const double norm = inst.samples.norm();
    if (norm > 0.0) inst.samples /= norm;
  }
}

BagBuild build_bags(const std::vector<Instance>& instances,
                    std::span<const double> gt_beats, int per_transducer) {
  if (per_transducer < 1) throw ConfigError("per_transducer must be at least 1");

  std::map<int, std::vector<size_t>> by_channel;  // instance indices sorted by time
  for (size_t j = 0; j < instances.size(); ++j) by_channel[instances[j].channel].push_back(j);
  for (auto& [channel, members] : by_channel) {
    std::stable_sort(members.begin(), members.end(), [&](size_t a, size_t b) {
      return instances[a].peak_time < instances[b].peak_time;
    });
  }

  const size_t n_beats = gt_beats.size();
  std::vector<std::vector<size_t>> claimed(n_beats);
  std::vector<bool> used(instances.size(), false);

  for (const auto& [channel, members] : by_channel) {
    const auto n = members.size();
    if (n == 0) continue;
    // Each beat streams its candidates outward from the nearest instance;
    // the heap merges the streams in (distance, beat, position) order.
    struct Frontier {
      size_t left = 0;   // next candidate on the left is left - 1
      size_t right = 0;  // next candidate on the right
      int taken = 0;
    };
    std::vector<Frontier> front(n_beats);
    using Entry = std::tuple<double, size_t, size_t>;  // distance, beat, position
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    const auto time_at = [&](size_t pos) { return instances[members[pos]].peak_time; };
    const auto push_next = [&](size_t beat) {
      Frontier& f = front[beat];
      const bool has_left = f.left > 0;
      const bool has_right = f.right < n;
      if (!has_left && !has_right) return;
      const double t = gt_beats[beat];
      size_t pos;
      if (has_left && has_right) {
        const double dl = t - time_at(f.left - 1);
        const double dr = time_at(f.right) - t;
        pos = dl <= dr ? f.left - 1 : f.right;
      } else {
        pos = has_left ? f.left - 1 : f.right;
      }
      if (pos + 1 == f.left) {
        --f.left;
      } else {
        ++f.right;
      }
      heap.emplace(std::abs(time_at(pos) - t), beat, pos);
    };

    for (size_t b = 0; b < n_beats; ++b) {
      const double t = gt_beats[b];
      size_t lo = 0;
      size_t hi = n;
      while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (time_at(mid) < t) {
          lo = mid + 1;
        } else {
          hi = mid;
        }
      }
      front[b].left = lo;
      front[b].right = lo;
      push_next(b);
    }
    while (!heap.empty()) {
      const auto [dist, beat, pos] = heap.top();
      heap.pop();
      const size_t idx = members[pos];
      if (!used[idx]) {
        used[idx] = true;
        claimed[beat].push_back(idx);
        if (++front[beat].taken >= per_transducer) continue;
      }
      push_next(beat);
    }
  }

  BagBuild out;
  for (size_t b = 0; b < n_beats; ++b) {
    if (claimed[b].empty()) {
      warn("beat " + std::to_string(b) + " has no nearby instances; positive bag dropped");
      out.dropped_beats.push_back(b);
      continue;
    }
    std::sort(claimed[b].begin(), claimed[b].end());
    Bag bag;
    bag.label = 1;
    bag.bag_id = static_cast<int>(b);
    for (size_t idx : claimed[b]) bag.instances.push_back(instances[idx]);
    out.bags.push_back(std::move(bag));
  }
  Bag negative;
  negative.label = 0;
  negative.bag_id = static_cast<int>(n_beats);
  for (size_t j = 0; j < instances.size(); ++j) {
    if (!used[j]) negative.instances.push_back(instances[j]);
  }
  if (negative.instances.empty()) {
    warn("every instance landed in a positive bag; the negative bag is empty");
    out.negative_bag_empty = true;
  } else {
    out.bags.push_back(std::move(negative));
  }
  return out;
}

}  // namespace bcgmil
