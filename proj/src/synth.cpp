#include "bcgmil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bcgmil/error.hpp"

namespace bcgmil {
namespace {

double lobe_shape(const Lobe& lobe, double t) {
  const double s = (t - lobe.center) / lobe.width;
  const double g = std::exp(-0.5 * s * s);
  return lobe.order == 2 ? (1.0 - s * s) * g : g;
}

double half_window(const SubjectProfile& p) {
  return static_cast<double>(p.template_length / 2) / p.sample_rate;
}

// Distinct streams for profile and recording draws sharing one user seed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

}  // namespace

double SubjectProfile::template_value(double t) const {
  if (std::abs(t) > half_window(*this) + 1e-12) return 0.0;
  double v = 0.0;
  for (const Lobe& lobe : lobes) v += lobe.amplitude * lobe_shape(lobe, t);
  return v;
}

Vector SubjectProfile::template_samples() const {
  Vector out(template_length);
  const int half = template_length / 2;
  for (int j = 0; j < template_length; ++j) {
    out[j] = template_value(static_cast<double>(j - half) / sample_rate);
  }
  return out;
}

SubjectProfile make_profile(std::uint64_t seed) {
  auto rng = stream(seed, 0x9e3779b9u);
  const auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  SubjectProfile p;
  p.lobes[0] = {0.0, uniform(0.03, 0.04), 1.0, 0};
  p.lobes[1] = {-uniform(0.08, 0.12), uniform(0.03, 0.045), -uniform(0.2, 0.4), 0};
  p.lobes[2] = {uniform(0.12, 0.16), uniform(0.065, 0.09), 0.0, 0};
  // K-wave amplitude balances the J and I areas so the beat has no DC content.
  p.lobes[2].amplitude =
      -(p.lobes[0].width + p.lobes[1].amplitude * p.lobes[1].width) / p.lobes[2].width;
  for (int c = 0; c < kTransducerCount; ++c) {
    p.channel_gains[static_cast<size_t>(c)] = uniform(0.7, 1.3);
    p.channel_delays[static_cast<size_t>(c)] = uniform(0.0, 0.015);
  }

  // The J-peak must be the strict global maximum of the sampled template.
  const int center = p.template_length / 2;
  for (int attempt = 0; attempt < 50; ++attempt) {
    const Vector t = p.template_samples();
    Eigen::Index arg = 0;
    t.maxCoeff(&arg);
    bool strict = arg == center;
    for (Eigen::Index j = 0; strict && j < t.size(); ++j) {
      if (j != center && t[j] >= t[center]) strict = false;
    }
    if (strict) break;
    p.lobes[1].amplitude *= 0.8;
    p.lobes[2].amplitude *= 0.8;
  }
  return p;
}

SyntheticRecording generate(const SubjectProfile& profile, double duration,
                            std::uint64_t seed) {
  if (!(duration >= 10.0)) throw ConfigError("synthetic recordings must last at least 10 s");
  if (profile.dropout_channel &&
      (*profile.dropout_channel < 0 || *profile.dropout_channel >= kTransducerCount)) {
    throw ConfigError("dropout channel out of range");
  }
  auto rng = stream(seed, 0x85ebca6bu);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticRecording out;
  Recording& rec = out.recording;
  rec.sample_rate = profile.sample_rate;
  const auto n = static_cast<size_t>(std::llround(duration * profile.sample_rate));

  constexpr double kMinRr = 0.3;
  double t = profile.mean_rr * (0.25 + 0.75 * unit(rng));
  while (t < duration) {
    out.true_beats.push_back(t);
    const double rr = std::clamp(profile.mean_rr + profile.rr_jitter * normal(rng), kMinRr,
                                 2.0 * profile.mean_rr);
    t += rr;
  }
  for (double beat : out.true_beats) {
    const double jitter =
        std::clamp(profile.gt_jitter * normal(rng), -3.0 * profile.gt_jitter,
                   3.0 * profile.gt_jitter);
    const double gt = beat + profile.gt_lag + jitter;
    if (gt < 0.0 || gt > duration) continue;
    if (!rec.gt_beats.empty() && gt <= rec.gt_beats.back()) continue;
    rec.gt_beats.push_back(gt);
  }

  const double reach = half_window(profile);
  rec.channels.assign(kTransducerCount, std::vector<double>(n, 0.0));
  for (int c = 0; c < kTransducerCount; ++c) {
    auto& ch = rec.channels[static_cast<size_t>(c)];
    const double gain = profile.dropout_channel == c
                            ? kDropoutGain
                            : profile.channel_gains[static_cast<size_t>(c)];
    const double delay = profile.channel_delays[static_cast<size_t>(c)];
    for (double beat : out.true_beats) {
      const double onset = beat + delay;
      const auto first = static_cast<long>(std::ceil((onset - reach) * profile.sample_rate));
      const auto last = static_cast<long>(std::floor((onset + reach) * profile.sample_rate));
      for (long i = std::max(first, 0L); i <= last && i < static_cast<long>(n); ++i) {
        ch[static_cast<size_t>(i)] +=
            gain * profile.template_value(static_cast<double>(i) / profile.sample_rate - onset);
      }
    }
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    for (size_t i = 0; i < n; ++i) {
      const double ti = static_cast<double>(i) / profile.sample_rate;
      double extra = 0.0;
      if (profile.resp_amp != 0.0) {
        extra += profile.resp_amp *
                 std::sin(2.0 * std::numbers::pi * profile.resp_freq * ti + phase);
      }
      if (profile.noise_sigma != 0.0) extra += profile.noise_sigma * normal(rng);
      ch[i] += extra;
    }
  }
  return out;
}

}  // namespace bcgmil
