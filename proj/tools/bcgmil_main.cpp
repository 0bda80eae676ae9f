// bcgmil: synth | train | detect | eval
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bcgmil/error.hpp"
#include "bcgmil/io.hpp"
#include "bcgmil/pipeline.hpp"
#include "bcgmil/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file");
  cmd->add_option("-s,--set", opts.overrides, "Override a config key (key=value)");
}

bcgmil::RunConfig load_config(const CommonOptions& opts) {
  bcgmil::RunConfig cfg;
  if (!opts.config_path.empty()) cfg.merge_json(bcgmil::read_text(opts.config_path));
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw bcgmil::ConfigError("override '" + kv + "' is not key=value");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string default_gt_path(const std::string& recording_path) {
  fs::path p(recording_path);
  return (p.parent_path() / (p.stem().string() + "_gt.csv")).string();
}

std::string in_dir(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw bcgmil::DataError("cannot create directory '" + dir + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heartbeat concept learning from bag-labeled BCG recordings"};
  app.require_subcommand(1);

  CommonOptions synth_opts, train_opts, detect_opts, eval_opts;
  std::string synth_out, synth_gt;
  std::string train_rec, train_gt, train_model;
  std::string detect_rec, detect_model, detect_out;
  std::string eval_det, eval_rec, eval_gt, eval_out;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic 4-transducer recording");
  add_common(synth, synth_opts);
  synth->add_option("-o,--out", synth_out, "Recording CSV to write")->required();
  synth->add_option("--gt-out", synth_gt, "Ground-truth CSV (default <out>_gt.csv)");

  auto* train = app.add_subcommand("train", "Learn a heartbeat concept from a recording");
  add_common(train, train_opts);
  train->add_option("-r,--recording", train_rec, "Recording CSV")->required();
  train->add_option("--gt", train_gt, "Ground-truth CSV (default <recording>_gt.csv)");
  train->add_option("-m,--model-out", train_model, "Model file to write")->required();

  auto* detect = app.add_subcommand("detect", "Score, confirm beats and estimate heart rate");
  add_common(detect, detect_opts);
  detect->add_option("-r,--recording", detect_rec, "Recording CSV")->required();
  detect->add_option("-m,--model", detect_model, "Model file")->required();
  detect->add_option("-o,--out-dir", detect_out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "ROC and heart-rate error against ground truth");
  add_common(eval, eval_opts);
  eval->add_option("-d,--detections", eval_det, "Directory written by detect")->required();
  eval->add_option("-r,--recording", eval_rec, "Recording CSV")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth CSV (default <recording>_gt.csv)");
  eval->add_option("-o,--out-dir", eval_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      const bcgmil::RunConfig cfg = load_config(synth_opts);
      bcgmil::SubjectProfile profile = bcgmil::make_profile(cfg.seed);
      profile.noise_sigma = cfg.noise_sigma;
      if (cfg.dropout_channel >= 0) profile.dropout_channel = cfg.dropout_channel;
      const bcgmil::SyntheticRecording syn = bcgmil::generate(profile, cfg.duration, cfg.seed);
      if (synth_gt.empty()) synth_gt = default_gt_path(synth_out);
      bcgmil::write_recording(synth_out, synth_gt, syn.recording);
      std::cout << "beats " << syn.recording.gt_beats.size() << '\n';
    } else if (train->parsed()) {
      const bcgmil::RunConfig cfg = load_config(train_opts);
      if (train_gt.empty()) train_gt = default_gt_path(train_rec);
      const bcgmil::Recording rec = bcgmil::read_recording(train_rec, train_gt);
      const bcgmil::TrainedModel model = bcgmil::train(rec, cfg);
      bcgmil::write_model(train_model, model);
      std::cout << "positive_bags " << model.positive_bags << '\n'
                << "training_instances " << model.training_instances << '\n'
                << "background_concepts " << model.concepts.background_count() << '\n'
                << "iterations " << model.iterations << (model.converged ? " (converged)" : "")
                << '\n'
                << "monotonicity_violations " << model.monotonicity_violations << '\n';
    } else if (detect->parsed()) {
      const bcgmil::RunConfig cfg = load_config(detect_opts);
      const bcgmil::Recording rec = bcgmil::read_recording(detect_rec, "");
      const bcgmil::TrainedModel model = bcgmil::read_model(detect_model);
      const bcgmil::Detection det = bcgmil::detect(rec, model, cfg);
      ensure_dir(detect_out);
      bcgmil::write_confidence(in_dir(detect_out, "confidence.csv"), det.series);
      bcgmil::write_beats(in_dir(detect_out, "beats.csv"), det.beats);
      bcgmil::write_rate(in_dir(detect_out, "rate.csv"), det.rate);
      std::cout << "confirmed_beats " << det.beats.size() << '\n';
    } else if (eval->parsed()) {
      const bcgmil::RunConfig cfg = load_config(eval_opts);
      if (eval_gt.empty()) eval_gt = default_gt_path(eval_rec);
      const bcgmil::Recording rec = bcgmil::read_recording(eval_rec, eval_gt);
      if (rec.gt_beats.empty()) throw bcgmil::DataError("recording has no ground truth");
      const bcgmil::ConfidenceSeries series =
          bcgmil::read_confidence(in_dir(eval_det, "confidence.csv"));
      const std::vector<bcgmil::RatePoint> rate = bcgmil::read_rate(in_dir(eval_det, "rate.csv"));
      const double start = cfg.test_start;
      const double end = bcgmil::segment_end(rec, cfg.test_end);
      const bcgmil::Evaluation ev = bcgmil::evaluate(series, rate, rec.gt_beats, start, end, cfg);
      ensure_dir(eval_out);
      bcgmil::write_roc(in_dir(eval_out, "roc.csv"), ev.roc, cfg.halo);
      bcgmil::write_rate(in_dir(eval_out, "reference_rate.csv"), ev.reference);
      const std::string report = bcgmil::format_report(ev, cfg);
      bcgmil::write_text(in_dir(eval_out, "report.txt"), report);
      std::cout << report;
    }
  } catch (const bcgmil::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case bcgmil::ErrorKind::kConfig:
        return kExitConfig;
      case bcgmil::ErrorKind::kData:
        return kExitData;
      case bcgmil::ErrorKind::kNumerical:
        return kExitNumerical;
    }
  }
  return 0;
}
