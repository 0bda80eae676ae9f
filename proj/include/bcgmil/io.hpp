#pragma once

// File formats.
//
//   recording CSV   header "time,ch0,ch1,ch2,ch3", one row per sample
//   ground truth    header "beat_time", one beat time per row
//   model file      line-oriented text, first line "bcgmil-model 1"; every
//                   real written with 17 significant digits
//   confidence CSV  header "channel,time,confidence"
//   beats CSV       header "beat_time"
//   rate CSV        header "time,bpm"
//   ROC CSV         header "threshold,fpr,tpr"
//
// Readers throw DataError with the file name and line number on malformed
// input; writers throw DataError when the path cannot be written.

#include <string>
#include <vector>

#include "bcgmil/pipeline.hpp"

namespace bcgmil {

inline constexpr int kModelFormatVersion = 1;

// Shortest decimal text that reads back to the same double.
std::string format_real(double value);

void write_recording(const std::string& csv_path, const std::string& gt_path,
                     const Recording& recording);
// Sample rate comes from the time column. An empty `gt_path` skips ground truth.
Recording read_recording(const std::string& csv_path, const std::string& gt_path);

void write_beats(const std::string& path, const std::vector<double>& beats);
std::vector<double> read_beats(const std::string& path);

std::string model_to_text(const TrainedModel& model);
TrainedModel model_from_text(const std::string& text);
void write_model(const std::string& path, const TrainedModel& model);
TrainedModel read_model(const std::string& path);

void write_confidence(const std::string& path, const ConfidenceSeries& series);
ConfidenceSeries read_confidence(const std::string& path);

void write_rate(const std::string& path, const std::vector<RatePoint>& rate);
std::vector<RatePoint> read_rate(const std::string& path);

void write_roc(const std::string& path, const RocCurve& curve, double halo);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace bcgmil
