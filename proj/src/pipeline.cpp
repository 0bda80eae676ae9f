#include "bcgmil/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "bcgmil/error.hpp"

namespace bcgmil {

using nlohmann::json;

namespace {

struct Field {
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <typename T>
Field bind(T RunConfig::*member) {
  return {[member](RunConfig& c, const json& v) { c.*member = v.get<T>(); },
          [member](const RunConfig& c) { return json(c.*member); }};
}

template <typename T>
Field bind_em(T EMConfig::*member) {
  return {[member](RunConfig& c, const json& v) { c.em.*member = v.get<T>(); },
          [member](const RunConfig& c) { return json(c.em.*member); }};
}

template <typename T>
Field bind_vote(T VotingParams::*member) {
  return {[member](RunConfig& c, const json& v) { c.voting.*member = v.get<T>(); },
          [member](const RunConfig& c) { return json(c.voting.*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"u", bind_em(&EMConfig::u)},
      {"m_init", bind_em(&EMConfig::m_init)},
      {"gamma", bind_em(&EMConfig::gamma)},
      {"alpha", bind_em(&EMConfig::alpha)},
      {"beta", bind_em(&EMConfig::beta)},
      {"tau", bind_em(&EMConfig::tau)},
      {"max_iters", bind_em(&EMConfig::max_iters)},
      {"conv_tol", bind_em(&EMConfig::conv_tol)},
      {"allow_empty_background", bind_em(&EMConfig::allow_empty_background)},
      {"instance_length", bind(&RunConfig::instance_length)},
      {"per_transducer", bind(&RunConfig::per_transducer)},
      {"low_cut", bind(&RunConfig::low_cut)},
      {"high_cut", bind(&RunConfig::high_cut)},
      {"instance_norm",
       {[](RunConfig& c, const json& v) {
          const auto s = v.get<std::string>();
          if (s != "unit" && s != "none") {
            throw ConfigError("instance_norm must be \"unit\" or \"none\"");
          }
          c.unit_norm = s == "unit";
        },
        [](const RunConfig& c) { return json(c.unit_norm ? "unit" : "none"); }}},
      {"threshold", bind_vote(&VotingParams::threshold)},
      {"vote_window", bind_vote(&VotingParams::window)},
      {"min_votes", bind_vote(&VotingParams::min_votes)},
      {"refractory", bind_vote(&VotingParams::refractory)},
      {"halo", bind(&RunConfig::halo)},
      {"rate_window", bind(&RunConfig::rate_window)},
      {"rate_step", bind(&RunConfig::rate_step)},
      {"duration", bind(&RunConfig::duration)},
      {"noise_sigma", bind(&RunConfig::noise_sigma)},
      {"dropout_channel", bind(&RunConfig::dropout_channel)},
      {"train_start", bind(&RunConfig::train_start)},
      {"train_end", bind(&RunConfig::train_end)},
      {"test_start", bind(&RunConfig::test_start)},
      {"test_end", bind(&RunConfig::test_end)},
      {"seed", bind(&RunConfig::seed)},
  };
  return table;
}

void apply(RunConfig& cfg, const std::string& key, const json& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(cfg, value);
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  em.validate();
  if (instance_length < 3 || instance_length % 2 == 0) {
    throw ConfigError("instance_length must be odd and at least 3");
  }
  if (per_transducer < 1) throw ConfigError("per_transducer must be at least 1");
  if (!(low_cut > 0.0 && low_cut < high_cut)) {
    throw ConfigError("cutoffs must satisfy 0 < low_cut < high_cut");
  }
  if (!(voting.window >= 0.0)) throw ConfigError("vote_window must be non-negative");
  if (voting.min_votes < 1) throw ConfigError("min_votes must be at least 1");
  if (!(voting.refractory >= 0.0)) throw ConfigError("refractory must be non-negative");
  if (!(halo >= 0.0)) throw ConfigError("halo must be non-negative");
  if (!(rate_window > 0.0 && rate_step > 0.0)) {
    throw ConfigError("rate_window and rate_step must be positive");
  }
  if (!(duration >= 10.0)) throw ConfigError("duration must be at least 10 s");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (dropout_channel < -1 || dropout_channel >= kTransducerCount) {
    throw ConfigError("dropout_channel must be -1 or a transducer index");
  }
  if (train_start < 0.0 || test_start < 0.0) throw ConfigError("segment starts must be >= 0");
}

void RunConfig::set(const std::string& key, const std::string& json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = json_value;  // bare strings such as instance_norm=unit
  }
  apply(*this, key, value);
}

void RunConfig::merge_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) apply(*this, key, value);
}

std::string RunConfig::to_json() const {
  json doc = json::object();
  for (const auto& [key, field] : fields()) doc[key] = field.get(*this);
  return doc.dump(2);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [key, field] : fields()) out.push_back(key);
  return out;
}

std::vector<Instance> prepare_instances(const Recording& raw, int instance_length,
                                        double low_cut, double high_cut, bool unit_norm,
                                        double start, double end) {
  const Recording filtered = filter_recording(raw, low_cut, high_cut);
  const PeakList peaks = restrict_peaks(find_peaks(filtered), start, end);
  std::vector<Instance> instances = extract_instances(filtered, peaks, instance_length);
  if (unit_norm) normalize_instances(instances);
  return instances;
}

double segment_end(const Recording& recording, double end) {
  return end < 0.0 ? recording.duration() : std::min(end, recording.duration());
}

TrainedModel train(const Recording& recording, const RunConfig& cfg) {
  cfg.validate();
  recording.validate();
  const double start = cfg.train_start;
  const double end = segment_end(recording, cfg.train_end);
  if (end - start < 30.0) {
    throw DataError("training span of " + std::to_string(end - start) +
                    " s is shorter than 30 s");
  }
  if (recording.gt_beats.empty()) throw DataError("training needs ground-truth beats");

  const std::vector<Instance> instances =
      prepare_instances(recording, cfg.instance_length, cfg.low_cut, cfg.high_cut,
                        cfg.unit_norm, start, end);
  std::vector<double> beats;
  for (double b : recording.gt_beats) {
    if (b >= start && b < end) beats.push_back(b);
  }
  BagBuild built = build_bags(instances, beats, cfg.per_transducer);
  const auto positive_bags = static_cast<int>(std::count_if(
      built.bags.begin(), built.bags.end(), [](const Bag& b) { return b.label == 1; }));
  if (positive_bags == 0) throw DataError("no positive bags");
  if (built.negative_bag_empty) throw DataError("no negative bag instances");

  const TrainingSet set = TrainingSet::from_bags(std::move(built.bags), cfg.instance_length);
  EMConfig em = cfg.em;
  em.seed = cfg.seed;
  FitResult result = fit(set, em);

  const Bag& negative = set.bags().back();
  TrainedModel model;
  model.background = background_stats(negative.instances);
  model.concepts = std::move(result.model);
  model.instance_length = cfg.instance_length;
  model.sample_rate = recording.sample_rate;
  model.low_cut = cfg.low_cut;
  model.high_cut = cfg.high_cut;
  model.unit_norm = cfg.unit_norm;
  model.objective_trace = std::move(result.objective_trace);
  model.iterations = result.iterations;
  model.converged = result.converged;
  model.pruned_history = std::move(result.pruned_history);
  model.monotonicity_violations = result.monotonicity_violations;
  model.positive_bags = positive_bags;
  model.training_instances = set.size();
  return model;
}

Detection detect(const Recording& recording, const TrainedModel& model, const RunConfig& cfg) {
  cfg.validate();
  recording.validate();
  if (model.instance_length != cfg.instance_length ||
      model.concepts.dim() != cfg.instance_length) {
    throw DataError("model instance length " + std::to_string(model.concepts.dim()) +
                    " does not match configured length " +
                    std::to_string(cfg.instance_length));
  }
  Detection out;
  out.start = cfg.test_start;
  out.end = segment_end(recording, cfg.test_end);
  if (!(out.end > out.start)) throw DataError("detection span is empty");

  const std::vector<Instance> instances =
      prepare_instances(recording, model.instance_length, model.low_cut, model.high_cut,
                        model.unit_norm, out.start, out.end);
  out.series = score_instances(instances, model.concepts.target(), model.background,
                               static_cast<int>(recording.channels.size()));
  out.beats = confirm_beats(out.series, cfg.voting);
  out.rate = heart_rate(out.beats, out.start, out.end, cfg.rate_window, cfg.rate_step);
  return out;
}

Evaluation evaluate(const ConfidenceSeries& series, const std::vector<RatePoint>& estimated,
                    std::span<const double> gt_beats, double start, double end,
                    const RunConfig& cfg) {
  if (gt_beats.empty()) throw DataError("evaluation needs ground-truth beats");
  std::vector<double> times;
  std::vector<double> scores;
  for (const auto& channel : series) {
    for (const ScoredPeak& s : channel) {
      times.push_back(s.time);
      scores.push_back(s.confidence);
    }
  }
  const std::vector<std::uint8_t> labels = label_instances(times, gt_beats, cfg.halo);

  Evaluation out;
  out.roc = roc(scores, labels);
  out.instances = static_cast<int>(labels.size());
  out.positives = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
  out.reference = heart_rate(gt_beats, start, end, cfg.rate_window, cfg.rate_step);
  out.rate = rate_error(estimated, out.reference);
  return out;
}

std::string format_report(const Evaluation& evaluation, const RunConfig& cfg) {
  char line[256];
  std::ostringstream os;
  os << "Mean error and standard deviation, heart rate estimation\n";
  os << "+-----------------+-----------------------+\n";
  os << "| Windows         | Mean Error (beat/min) |\n";
  os << "+-----------------+-----------------------+\n";
  std::snprintf(line, sizeof(line), "| %-15d | %8.2f +/- %-8.2f |\n", evaluation.rate.n_windows,
                evaluation.rate.mean_abs_error, evaluation.rate.std_dev);
  os << line;
  os << "+-----------------+-----------------------+\n";
  std::snprintf(line, sizeof(line), "rate window: %g s, step %g s\n", cfg.rate_window,
                cfg.rate_step);
  os << line;
  std::snprintf(line, sizeof(line), "ROC AUC: %.6f\n", evaluation.roc.auc);
  os << line;
  std::snprintf(line, sizeof(line),
                "ROC truthing: per instance, positive within +/-%g s of a ground-truth beat "
                "(%d of %d instances); FPR denominator = negative instances\n",
                cfg.halo, evaluation.positives, evaluation.instances);
  os << line;
  return os.str();
}

}  // namespace bcgmil
