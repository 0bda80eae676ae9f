#include "bcgmil/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bcgmil/error.hpp"

namespace bcgmil {
namespace {

std::string format_17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw DataError("failed while writing '" + path + "'");
}

class LineReader {
 public:
  LineReader(std::string name, std::istream& in) : name_(std::move(name)), in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(name_ + ":" + std::to_string(number_) + ": " + what);
  }

  double parse_real(std::string_view token) const {
    double value = 0.0;
    const auto* begin = token.data();
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) fail("expected a number, got '" + std::string(token) + "'");
    return value;
  }

  long parse_int(std::string_view token) const {
    long value = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) fail("expected an integer, got '" + std::string(token) + "'");
    return value;
  }

  std::vector<double> parse_csv_reals(const std::string& line, size_t expected) const {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= line.size()) {
      const size_t comma = std::min(line.find(',', pos), line.size());
      out.push_back(parse_real(std::string_view(line).substr(pos, comma - pos)));
      pos = comma + 1;
    }
    if (out.size() != expected) {
      fail("expected " + std::to_string(expected) + " columns, got " + std::to_string(out.size()));
    }
    return out;
  }

 private:
  std::string name_;
  std::istream& in_;
  int number_ = 0;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  return in;
}

void expect_header(LineReader& reader, const std::string& header) {
  std::string line;
  if (!reader.next(line)) reader.fail("missing header '" + header + "'");
  if (line != header) reader.fail("expected header '" + header + "', got '" + line + "'");
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> tokens;
  std::string token;
  while (is >> token) tokens.push_back(token);
  return tokens;
}

void write_vector_line(std::ostream& os, const std::string& key, const Vector& v) {
  os << key;
  for (Eigen::Index j = 0; j < v.size(); ++j) os << ' ' << format_17(v[j]);
  os << '\n';
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return format_17(value);
  return std::string(buf, ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  close_out(out, path);
}

void write_recording(const std::string& csv_path, const std::string& gt_path,
                     const Recording& recording) {
  recording.validate();
  std::ofstream out = open_out(csv_path);
  out << "time";
  for (size_t c = 0; c < recording.channels.size(); ++c) out << ",ch" << c;
  out << '\n';
  for (size_t i = 0; i < recording.length(); ++i) {
    out << format_real(static_cast<double>(i) / recording.sample_rate);
    for (const auto& ch : recording.channels) out << ',' << format_real(ch[i]);
    out << '\n';
  }
  close_out(out, csv_path);
  write_beats(gt_path, recording.gt_beats);
}

Recording read_recording(const std::string& csv_path, const std::string& gt_path) {
  std::ifstream in = open_in(csv_path);
  LineReader reader(csv_path, in);
  std::string line;
  if (!reader.next(line)) reader.fail("empty recording file");
  if (line.rfind("time,", 0) != 0) reader.fail("header must start with 'time,'");
  size_t channels = 0;
  {
    size_t pos = 5;
    while (pos <= line.size()) {
      const size_t comma = std::min(line.find(',', pos), line.size());
      const std::string name = line.substr(pos, comma - pos);
      if (name != "ch" + std::to_string(channels)) reader.fail("unexpected column '" + name + "'");
      ++channels;
      pos = comma + 1;
    }
  }
  Recording rec;
  rec.channels.assign(channels, {});
  std::vector<double> times;
  while (reader.next(line)) {
    const std::vector<double> row = reader.parse_csv_reals(line, channels + 1);
    times.push_back(row[0]);
    for (size_t c = 0; c < channels; ++c) rec.channels[c].push_back(row[c + 1]);
  }
  if (times.size() < 2) reader.fail("recording needs at least two samples");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) reader.fail("time column must increase");
  rec.sample_rate = std::round(1e6 / dt) / 1e6;
  if (!gt_path.empty()) rec.gt_beats = read_beats(gt_path);
  rec.validate();
  return rec;
}

void write_beats(const std::string& path, const std::vector<double>& beats) {
  std::ofstream out = open_out(path);
  out << "beat_time\n";
  for (double b : beats) out << format_real(b) << '\n';
  close_out(out, path);
}

std::vector<double> read_beats(const std::string& path) {
  std::ifstream in = open_in(path);
  LineReader reader(path, in);
  expect_header(reader, "beat_time");
  std::vector<double> beats;
  std::string line;
  while (reader.next(line)) beats.push_back(reader.parse_real(line));
  return beats;
}

std::string model_to_text(const TrainedModel& model) {
  std::ostringstream os;
  const int d = model.concepts.dim();
  os << "bcgmil-model " << kModelFormatVersion << '\n';
  os << "instance_length " << model.instance_length << '\n';
  os << "sample_rate " << format_17(model.sample_rate) << '\n';
  os << "low_cut " << format_17(model.low_cut) << '\n';
  os << "high_cut " << format_17(model.high_cut) << '\n';
  os << "instance_norm " << (model.unit_norm ? "unit" : "none") << '\n';
  os << "background_count " << model.concepts.background_count() << '\n';
  write_vector_line(os, "target", model.concepts.target());
  for (int k = 0; k < model.concepts.background_count(); ++k) {
    write_vector_line(os, "background " + std::to_string(k), model.concepts.background(k));
  }
  write_vector_line(os, "background_mean", model.background.mean());
  for (int r = 0; r < d; ++r) {
    write_vector_line(os, "background_cov " + std::to_string(r),
                      model.background.covariance().row(r).transpose());
  }
  os << "iterations " << model.iterations << '\n';
  os << "converged " << (model.converged ? 1 : 0) << '\n';
  os << "monotonicity_violations " << model.monotonicity_violations << '\n';
  os << "positive_bags " << model.positive_bags << '\n';
  os << "training_instances " << model.training_instances << '\n';
  os << "objective_trace " << model.objective_trace.size();
  for (double v : model.objective_trace) os << ' ' << format_17(v);
  os << '\n';
  os << "pruned " << model.pruned_history.size();
  for (const PruneEvent& e : model.pruned_history) os << ' ' << e.iteration << ':' << e.concept_index;
  os << '\n';
  return os.str();
}

TrainedModel model_from_text(const std::string& text) {
  std::istringstream in(text);
  LineReader reader("model", in);
  std::string line;

  const auto fields = [&](const std::string& key, size_t min_tokens) {
    if (!reader.next(line)) reader.fail("missing '" + key + "' line");
    std::vector<std::string> tokens = split_ws(line);
    if (tokens.empty() || tokens[0] != key) reader.fail("expected '" + key + "'");
    if (tokens.size() < min_tokens + 1) reader.fail("too few values for '" + key + "'");
    tokens.erase(tokens.begin());
    return tokens;
  };
  const auto single = [&](const std::string& key) {
    const auto tokens = fields(key, 1);
    if (tokens.size() != 1) reader.fail("expected one value for '" + key + "'");
    return tokens[0];
  };
  const auto vector_of = [&](const std::vector<std::string>& tokens, size_t offset, int n) {
    if (tokens.size() != offset + static_cast<size_t>(n)) reader.fail("wrong vector length");
    Vector v(n);
    for (int j = 0; j < n; ++j) v[j] = reader.parse_real(tokens[offset + static_cast<size_t>(j)]);
    return v;
  };

  const std::string version = single("bcgmil-model");
  if (reader.parse_int(version) != kModelFormatVersion) {
    reader.fail("unsupported model format version " + version);
  }
  TrainedModel model;
  model.instance_length = static_cast<int>(reader.parse_int(single("instance_length")));
  const int d = model.instance_length;
  if (d < 1) reader.fail("instance_length must be positive");
  model.sample_rate = reader.parse_real(single("sample_rate"));
  model.low_cut = reader.parse_real(single("low_cut"));
  model.high_cut = reader.parse_real(single("high_cut"));
  const std::string norm = single("instance_norm");
  if (norm != "unit" && norm != "none") reader.fail("bad instance_norm '" + norm + "'");
  model.unit_norm = norm == "unit";
  const long m = reader.parse_int(single("background_count"));
  if (m < 0) reader.fail("negative background_count");

  Matrix concepts(d, m + 1);
  concepts.col(0) = vector_of(fields("target", 1), 0, d);
  for (long k = 0; k < m; ++k) {
    const auto tokens = fields("background", 2);
    if (reader.parse_int(tokens[0]) != k) reader.fail("background concepts out of order");
    concepts.col(k + 1) = vector_of(tokens, 1, d);
  }
  model.concepts = ConceptModel(std::move(concepts));

  Vector mean = vector_of(fields("background_mean", 1), 0, d);
  Matrix cov(d, d);
  for (int r = 0; r < d; ++r) {
    const auto tokens = fields("background_cov", 2);
    if (reader.parse_int(tokens[0]) != r) reader.fail("covariance rows out of order");
    cov.row(r) = vector_of(tokens, 1, d).transpose();
  }
  model.background = BackgroundStats(std::move(mean), std::move(cov));

  model.iterations = static_cast<int>(reader.parse_int(single("iterations")));
  model.converged = reader.parse_int(single("converged")) != 0;
  model.monotonicity_violations =
      static_cast<int>(reader.parse_int(single("monotonicity_violations")));
  model.positive_bags = static_cast<int>(reader.parse_int(single("positive_bags")));
  model.training_instances =
      static_cast<int>(reader.parse_int(single("training_instances")));

  const auto trace = fields("objective_trace", 1);
  const long n_trace = reader.parse_int(trace[0]);
  if (n_trace < 0 || trace.size() != static_cast<size_t>(n_trace) + 1) {
    reader.fail("objective_trace length mismatch");
  }
  for (long j = 0; j < n_trace; ++j) {
    model.objective_trace.push_back(reader.parse_real(trace[static_cast<size_t>(j) + 1]));
  }
  const auto pruned = fields("pruned", 1);
  const long n_pruned = reader.parse_int(pruned[0]);
  if (n_pruned < 0 || pruned.size() != static_cast<size_t>(n_pruned) + 1) {
    reader.fail("pruned length mismatch");
  }
  for (long j = 0; j < n_pruned; ++j) {
    const std::string& token = pruned[static_cast<size_t>(j) + 1];
    const size_t colon = token.find(':');
    if (colon == std::string::npos) reader.fail("bad prune event '" + token + "'");
    model.pruned_history.push_back(
        {static_cast<int>(reader.parse_int(std::string_view(token).substr(0, colon))),
         static_cast<int>(reader.parse_int(std::string_view(token).substr(colon + 1)))});
  }
  if (reader.next(line)) reader.fail("unexpected trailing content");
  return model;
}

void write_model(const std::string& path, const TrainedModel& model) {
  write_text(path, model_to_text(model));
}

TrainedModel read_model(const std::string& path) {
  try {
    return model_from_text(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_confidence(const std::string& path, const ConfidenceSeries& series) {
  std::ofstream out = open_out(path);
  out << "channel,time,confidence\n";
  for (size_t c = 0; c < series.size(); ++c) {
    for (const ScoredPeak& s : series[c]) {
      out << c << ',' << format_real(s.time) << ',' << format_real(s.confidence) << '\n';
    }
  }
  close_out(out, path);
}

ConfidenceSeries read_confidence(const std::string& path) {
  std::ifstream in = open_in(path);
  LineReader reader(path, in);
  expect_header(reader, "channel,time,confidence");
  ConfidenceSeries series;
  std::string line;
  while (reader.next(line)) {
    const std::vector<double> row = reader.parse_csv_reals(line, 3);
    const double channel = row[0];
    if (channel < 0 || channel != std::floor(channel) || channel > 1024) {
      reader.fail("bad channel index");
    }
    const auto c = static_cast<size_t>(channel);
    if (series.size() <= c) series.resize(c + 1);
    series[c].push_back({row[1], row[2]});
  }
  return series;
}

void write_rate(const std::string& path, const std::vector<RatePoint>& rate) {
  std::ofstream out = open_out(path);
  out << "time,bpm\n";
  for (const RatePoint& r : rate) out << format_real(r.time) << ',' << format_real(r.bpm) << '\n';
  close_out(out, path);
}

std::vector<RatePoint> read_rate(const std::string& path) {
  std::ifstream in = open_in(path);
  LineReader reader(path, in);
  expect_header(reader, "time,bpm");
  std::vector<RatePoint> rate;
  std::string line;
  while (reader.next(line)) {
    const std::vector<double> row = reader.parse_csv_reals(line, 2);
    rate.push_back({row[0], row[1]});
  }
  return rate;
}

void write_roc(const std::string& path, const RocCurve& curve, double halo) {
  std::ofstream out = open_out(path);
  out << "# instance-level ROC; positive = peak within +/-" << format_real(halo)
      << " s of a ground-truth beat; FPR denominator = negative instances\n";
  out << "# auc " << format_17(curve.auc) << '\n';
  out << "threshold,fpr,tpr\n";
  for (const RocPoint& p : curve.points) {
    out << format_real(p.threshold) << ',' << format_real(p.fpr) << ',' << format_real(p.tpr)
        << '\n';
  }
  close_out(out, path);
}

}  // namespace bcgmil
