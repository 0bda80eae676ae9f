#pragma once

// Ground-truthed synthetic 4-transducer BCG recordings.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "bcgmil/model.hpp"
#include "bcgmil/signal.hpp"

namespace bcgmil {

inline constexpr int kTransducerCount = 4;

// One Gaussian-family lobe with s = (t - center) / width:
//   order 0: a * exp(-s^2 / 2)
//   order 2: a * (1 - s^2) * exp(-s^2 / 2)   (Ricker)
struct Lobe {
  double center = 0.0;  // seconds relative to the J-peak
  double width = 0.05;  // seconds
  double amplitude = 1.0;
  int order = 2;
};

struct SubjectProfile {
  std::array<Lobe, 3> lobes;  // J-peak, I-wave, K-wave; lobes[0] sits at t = 0
  int template_length = kDefaultInstanceLength;
  double sample_rate = 100.0;

  double mean_rr = 0.85;
  double rr_jitter = 0.04;
  double resp_freq = 0.25;
  double resp_amp = 0.5;  // relative to the J-peak amplitude
  double gt_lag = 0.08;
  double gt_jitter = 0.02;
  std::array<double, kTransducerCount> channel_gains{1.0, 1.0, 1.0, 1.0};
  std::array<double, kTransducerCount> channel_delays{0.0, 0.0, 0.0, 0.0};
  std::optional<int> dropout_channel;
  double noise_sigma = 0.2;  // white noise std, relative to the J-peak amplitude

  // Template sampled at template_length points centered on the J-peak.
  Vector template_samples() const;
  // Continuous template; zero outside the sampled window.
  double template_value(double t) const;
};

inline constexpr double kDropoutGain = 0.05;

// Deterministic in `seed`. Lobe shapes and per-channel gains and delays vary
// with the seed; the remaining fields take their defaults. No dropout channel.
SubjectProfile make_profile(std::uint64_t seed);

struct SyntheticRecording {
  Recording recording;
  std::vector<double> true_beats;  // beat onsets as injected into the channels
};

// Throws ConfigError for durations under 10 s.
SyntheticRecording generate(const SubjectProfile& profile, double duration,
                            std::uint64_t seed);

}  // namespace bcgmil
