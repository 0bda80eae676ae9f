#pragma once

// End-to-end drivers shared by the command-line tool and the Python module:
// configuration, training, detection and evaluation on recordings.

#include <cstdint>
#include <string>
#include <vector>

#include "bcgmil/detector.hpp"
#include "bcgmil/efumi.hpp"
#include "bcgmil/evaluation.hpp"
#include "bcgmil/signal.hpp"
#include "bcgmil/synth.hpp"

namespace bcgmil {

struct RunConfig {
  EMConfig em;

  int instance_length = kDefaultInstanceLength;
  int per_transducer = 3;
  double low_cut = kDefaultLowCutHz;
  double high_cut = kDefaultHighCutHz;
  bool unit_norm = true;  // scale every instance to unit length before use

  VotingParams voting;

  double halo = 0.25;
  double rate_window = 60.0;
  double rate_step = 1.0;

  double duration = 600.0;     // synthetic recording length, seconds
  double noise_sigma = 0.2;
  int dropout_channel = -1;    // -1: none

  // Segments in seconds; a negative end means "to the end of the recording".
  double train_start = 0.0;
  double train_end = -1.0;
  double test_start = 0.0;
  double test_end = -1.0;

  std::uint64_t seed = 7;

  // Throws ConfigError on the first invalid field.
  void validate() const;

  // Sets one field from its config key; the value is JSON text. Throws
  // ConfigError for unknown keys or mistyped values.
  void set(const std::string& key, const std::string& json_value);
  // Applies every key of a JSON object; unknown keys are rejected.
  void merge_json(const std::string& json_text);
  std::string to_json() const;

  static std::vector<std::string> keys();
};

struct TrainedModel {
  ConceptModel concepts;
  BackgroundStats background;
  int instance_length = kDefaultInstanceLength;
  double sample_rate = 100.0;
  double low_cut = kDefaultLowCutHz;
  double high_cut = kDefaultHighCutHz;
  bool unit_norm = true;

  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  std::vector<PruneEvent> pruned_history;
  int monotonicity_violations = 0;
  int positive_bags = 0;
  int training_instances = 0;
};

// Filter, find peaks in [start, end), cut instances and optionally normalize.
std::vector<Instance> prepare_instances(const Recording& raw, int instance_length,
                                        double low_cut, double high_cut, bool unit_norm,
                                        double start, double end);

// Resolves a possibly negative segment end against the recording.
double segment_end(const Recording& recording, double end);

// Throws DataError for training spans under 30 s or missing bags.
TrainedModel train(const Recording& recording, const RunConfig& cfg);

struct Detection {
  ConfidenceSeries series;
  std::vector<double> beats;
  std::vector<RatePoint> rate;
  double start = 0.0;
  double end = 0.0;
};

// Throws DataError when the model's instance length differs from the config.
Detection detect(const Recording& recording, const TrainedModel& model, const RunConfig& cfg);

struct Evaluation {
  RocCurve roc;
  RateErrorStats rate;
  std::vector<RatePoint> reference;
  int instances = 0;
  int positives = 0;
};

// Scores every instance in `series` against halo-based truth, and compares
// `estimated` to the ground-truth rate on the same window grid.
Evaluation evaluate(const ConfidenceSeries& series, const std::vector<RatePoint>& estimated,
                    std::span<const double> gt_beats, double start, double end,
                    const RunConfig& cfg);

// Human-readable report in the layout of a heart-rate error table.
std::string format_report(const Evaluation& evaluation, const RunConfig& cfg);

}  // namespace bcgmil
