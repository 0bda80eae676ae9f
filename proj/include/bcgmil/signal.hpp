#pragma once

// Multi-transducer recordings -> band-passed channels -> peak-centered
// instances -> labeled bags.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bcgmil/model.hpp"

namespace bcgmil {

struct Recording {
  double sample_rate = 100.0;
  std::vector<std::vector<double>> channels;
  std::vector<double> gt_beats;  // seconds, strictly increasing

  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
  double duration() const { return static_cast<double>(length()) / sample_rate; }

  // Throws DataError on unequal channel lengths, non-increasing or
  // out-of-range beat times, or a non-positive sample rate.
  void validate() const;
};

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1
};

// Butterworth band-pass as a cascade of second-order sections. The analog
// low-pass prototype of order `prototype_order` is mapped to a band-pass
// and discretized with the bilinear transform; band edges are prewarped so
// the digital -3 dB points land on the requested cutoffs.
class BandpassFilter {
 public:
  static BandpassFilter butterworth(double low_hz, double high_hz, double sample_rate,
                                    int prototype_order = 2);

  // Causal, single pass, zero initial state. Output has the input length.
  std::vector<double> apply(std::span<const double> signal) const;

  std::complex<double> response(double freq_hz) const;
  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }

  const std::vector<Biquad>& sections() const { return sections_; }
  double sample_rate() const { return sample_rate_; }

 private:
  std::vector<Biquad> sections_;
  double sample_rate_ = 0.0;
};

inline constexpr double kDefaultLowCutHz = 0.4;
inline constexpr double kDefaultHighCutHz = 10.0;

std::vector<double> bandpass(std::span<const double> signal, double sample_rate,
                             double low_hz = kDefaultLowCutHz,
                             double high_hz = kDefaultHighCutHz);

// Same recording with every channel band-passed.
Recording filter_recording(const Recording& recording, double low_hz = kDefaultLowCutHz,
                           double high_hz = kDefaultHighCutHz);

// Strict local maxima: f[m-1] < f[m] >= f[m+1]. Endpoints never qualify.
std::vector<std::size_t> detect_peaks(std::span<const double> filtered);

struct Peak {
  std::size_t index = 0;
  double time = 0.0;
};

// One sorted peak list per channel.
using PeakList = std::vector<std::vector<Peak>>;

PeakList find_peaks(const Recording& filtered);

// Keeps peaks with start <= time < end.
PeakList restrict_peaks(const PeakList& peaks, double start, double end);

// One instance per peak whose centered window of odd length `dim` fits in the
// channel; boundary peaks are skipped. Ordered by channel, then time.
std::vector<Instance> extract_instances(const Recording& filtered, const PeakList& peaks,
                                        int dim, int source_id = 0);

// Scales each instance to unit Euclidean norm; all-zero windows are left alone.
void normalize_instances(std::vector<Instance>& instances);

struct BagBuild {
  std::vector<Bag> bags;  // positive bags in beat order, then the negative bag
  std::vector<std::size_t> dropped_beats;
  bool negative_bag_empty = false;
};

// One positive bag per beat holding, per channel, the `per_transducer`
// instances nearest in time. Each instance joins at most one positive bag:
// candidate (beat, instance) pairs are claimed in order of increasing time
// distance, ties broken by earlier beat, then earlier instance. Unclaimed
// instances form a single negative bag.
BagBuild build_bags(const std::vector<Instance>& instances,
                    std::span<const double> gt_beats, int per_transducer = 3);

}  // namespace bcgmil
