#include "synten/io.hpp"

#include "synten/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace synten {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------- deterministic JSON emission ----------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep floats recognisable as floats after a round trip.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void emit(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order: sorted keys
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        emit(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        emit(j[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      break;
    }
    default:
      out += j.dump();
  }
}

std::string dump(const json& j) {
  std::string out;
  emit(j, out);
  out += '\n';
  return out;
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json columns_json(const Matrix& m) {
  json a = json::array();
  for (Index c = 0; c < m.cols(); ++c) a.push_back(vec_json(m.col(c)));
  return a;
}

json correlation_json(const CorrelationMatrix& c) {
  json rows = json::array();
  for (Index i = 0; i < c.values.rows(); ++i) rows.push_back(vec_json(c.values.row(i).transpose()));
  return {{"rows", c.row_labels}, {"cols", c.col_labels}, {"values", rows}};
}

json synergy_json(const LabeledSynergy& s) {
  json j = {{"label", s.label}, {"weights", vec_json(s.weights)}};
  j["task_id"] = s.task_id ? json(*s.task_id) : json(nullptr);
  return j;
}

json report_json(const SynergyReport& r, bool include_runtime) {
  json j;
  j["schema"] = kReportSchema;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["fit_metric"] = r.fit_metric;
  j["fit"] = r.fit;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["synergies"] = json::array();
  for (const auto& s : r.synergies) j["synergies"].push_back(synergy_json(s));
  j["task_means"] = json::array();
  for (const auto& s : r.task_means) j["task_means"].push_back(synergy_json(s));
  j["temporal"] = columns_json(r.temporal);
  j["repetition"] = columns_json(r.repetition);
  j["repetition_labels"] = json::array();
  for (const auto& l : r.repetition_labels)
    j["repetition_labels"].push_back({{"task", l.task_id}, {"rep", l.repetition_id}});
  j["per_repetition_vaf"] = r.per_repetition_vaf;
  j["correlations"] = json::array();
  for (const auto& c : r.correlations) {
    json cj = correlation_json(c.matrix);
    cj["name"] = c.name;
    j["correlations"].push_back(cj);
  }
  j["metrics"] = json::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  j["warnings"] = r.warnings;
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

Vector vec_from(const json& a) {
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v(static_cast<Index>(i)) = a[i].is_null() ? std::nan("") : a[i].get<double>();
  return v;
}

Matrix columns_from(const json& a) {
  if (a.empty()) return Matrix();
  Matrix m(static_cast<Index>(a[0].size()), static_cast<Index>(a.size()));
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].size() != a[0].size()) throw IoError("report: ragged column list");
    m.col(static_cast<Index>(c)) = vec_from(a[c]);
  }
  return m;
}

LabeledSynergy synergy_from(const json& j) {
  LabeledSynergy s;
  s.label = j.at("label").get<std::string>();
  if (!j.at("task_id").is_null()) s.task_id = j.at("task_id").get<int>();
  s.weights = vec_from(j.at("weights"));
  return s;
}

// ---------- CSV ----------

std::string trim_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_number(const std::string& field, double& v) {
  std::size_t b = field.find_first_not_of(" \t");
  std::size_t e = field.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = field.data() + b;
  const char* last = field.data() + e + 1;
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  return res.ec == std::errc() && res.ptr == last;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string epoch_file_name(int task_id, int repetition_id) {
  return "task" + std::to_string(task_id) + "_rep" + std::to_string(repetition_id) + ".csv";
}

Epoch parse_epoch_csv(const std::string& text, const std::string& origin, int task_id, int repetition_id,
                      double* sample_rate) {
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Index channels = -1;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;

  const auto where = [&](std::size_t n) { return origin + ":" + std::to_string(n) + ": "; };

  if (!std::getline(in, line)) {
    throw DataError({origin + ":1: empty file"});
  }
  ++lineno;
  {
    const auto fields = split_commas(trim_cr(line));
    bool ok = fields.size() >= 2 && fields[0] == "t";
    for (std::size_t i = 1; ok && i < fields.size(); ++i) ok = fields[i] == "ch" + std::to_string(i);
    if (!ok) {
      throw DataError({where(1) + "header must be t,ch1,...,chN"});
    }
    channels = static_cast<Index>(fields.size() - 1);
  }
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (static_cast<Index>(fields.size()) != channels + 1) {
      errors.push_back(where(lineno) + "expected " + std::to_string(channels + 1) + " fields, got " +
                       std::to_string(fields.size()));
      continue;
    }
    std::vector<double> row(static_cast<std::size_t>(channels));
    double t = 0.0;
    bool ok = true;
    if (!parse_number(fields[0], t) || !std::isfinite(t)) {
      errors.push_back(where(lineno) + "time value '" + fields[0] + "' is not a finite number");
      ok = false;
    }
    for (Index c = 0; c < channels; ++c) {
      double v = 0.0;
      const std::string& f = fields[static_cast<std::size_t>(c + 1)];
      if (!parse_number(f, v) || !std::isfinite(v)) {
        errors.push_back(where(lineno) + "ch" + std::to_string(c + 1) + " value '" + f + "' is not a finite number");
        ok = false;
      } else if (v < 0.0) {
        errors.push_back(where(lineno) + "ch" + std::to_string(c + 1) + " value " + f +
                         " is negative (envelopes must be non-negative)");
        ok = false;
      }
      row[static_cast<std::size_t>(c)] = v;
    }
    if (!ok) continue;
    if (!times.empty() && !(t > times.back())) {
      errors.push_back(where(lineno) + "time column must be strictly increasing");
      continue;
    }
    times.push_back(t);
    rows.push_back(std::move(row));
  }
  if (errors.empty() && rows.size() < 2) errors.push_back(origin + ": need at least two samples");
  if (!errors.empty()) throw DataError(std::move(errors));

  Epoch e;
  e.task_id = task_id;
  e.repetition_id = repetition_id;
  e.samples.resize(static_cast<Index>(rows.size()), channels);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index c = 0; c < channels; ++c) e.samples(static_cast<Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  if (sample_rate) {
    std::vector<double> dt;
    for (std::size_t i = 1; i < times.size(); ++i) dt.push_back(times[i] - times[i - 1]);
    *sample_rate = 1.0 / median(dt);
  }
  return e;
}

RecordingSet read_epochs(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("no such file or directory: " + path.string());
  std::vector<fs::path> files;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  } else {
    files.push_back(path);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError({path.string() + ": no epochs found"});

  static const std::regex name_re(R"(task(\d+)_rep(\d+)\.csv)");
  std::vector<std::string> errors;
  RecordingSet rs;
  std::vector<double> rates;
  std::vector<std::string> rate_origin;
  for (const auto& f : files) {
    std::smatch m;
    const std::string name = f.filename().string();
    if (!std::regex_match(name, m, name_re)) {
      errors.push_back(f.string() + ": file name must look like task<T>_rep<R>.csv");
      continue;
    }
    try {
      double rate = 0.0;
      Epoch e = parse_epoch_csv(read_text_file(f), f.string(), std::stoi(m[1].str()), std::stoi(m[2].str()), &rate);
      if (rs.channel_count == 0) {
        rs.channel_count = e.samples.cols();
      } else if (e.samples.cols() != rs.channel_count) {
        errors.push_back(f.string() + ":1: has " + std::to_string(e.samples.cols()) + " channels, expected " +
                         std::to_string(rs.channel_count));
        continue;
      }
      rates.push_back(rate);
      rate_origin.push_back(f.string());
      rs.epochs.push_back(std::move(e));
    } catch (const DataError& err) {
      errors.insert(errors.end(), err.locations().begin(), err.locations().end());
    } catch (const std::out_of_range&) {
      errors.push_back(f.string() + ": task or repetition id out of range");
    }
  }
  if (!rates.empty()) {
    const double rate = median(rates);
    for (std::size_t i = 0; i < rates.size(); ++i)
      if (std::abs(rates[i] - rate) > 0.01 * rate)
        errors.push_back(rate_origin[i] + ": sample rate " + format_double(rates[i]) + " Hz differs from " +
                         format_double(rate) + " Hz");
    rs.sample_rate = rate;
  }
  if (!errors.empty()) throw DataError(std::move(errors));
  try {
    rs.validate();
  } catch (const ArgumentError& err) {
    throw DataError({path.string() + ": " + err.what()});
  }
  return rs;
}

std::string epoch_to_csv(const Epoch& e, double sample_rate) {
  std::string out = "t";
  for (Index c = 0; c < e.samples.cols(); ++c) out += ",ch" + std::to_string(c + 1);
  out += '\n';
  for (Index i = 0; i < e.samples.rows(); ++i) {
    out += format_double(static_cast<double>(i) / sample_rate);
    for (Index c = 0; c < e.samples.cols(); ++c) {
      out += ',';
      out += format_double(e.samples(i, c));
    }
    out += '\n';
  }
  return out;
}

void write_epochs(const RecordingSet& rs, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& e : rs.epochs)
    write_text_file(dir / epoch_file_name(e.task_id, e.repetition_id), epoch_to_csv(e, rs.sample_rate));
}

std::string report_to_json(const SynergyReport& r, bool include_runtime) { return dump(report_json(r, include_runtime)); }

SynergyReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("report: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<int>() != kReportSchema)
      throw IoError("report: unsupported schema " + j.at("schema").dump());
    SynergyReport r;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.fit_metric = j.at("fit_metric").get<std::string>();
    r.fit = j.at("fit").is_null() ? std::nan("") : j.at("fit").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    for (const auto& s : j.at("synergies")) r.synergies.push_back(synergy_from(s));
    for (const auto& s : j.at("task_means")) r.task_means.push_back(synergy_from(s));
    r.temporal = columns_from(j.at("temporal"));
    r.repetition = columns_from(j.at("repetition"));
    for (const auto& l : j.at("repetition_labels")) r.repetition_labels.push_back({l.at("task").get<int>(), l.at("rep").get<int>()});
    for (const auto& v : j.at("per_repetition_vaf")) r.per_repetition_vaf.push_back(v.get<double>());
    for (const auto& c : j.at("correlations")) {
      NamedCorrelation nc;
      nc.name = c.at("name").get<std::string>();
      nc.matrix.row_labels = c.at("rows").get<std::vector<std::string>>();
      nc.matrix.col_labels = c.at("cols").get<std::vector<std::string>>();
      const json& rows = c.at("values");
      nc.matrix.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(nc.matrix.col_labels.size()));
      for (std::size_t i = 0; i < rows.size(); ++i)
        nc.matrix.values.row(static_cast<Index>(i)) = vec_from(rows[i]).transpose();
      r.correlations.push_back(std::move(nc));
    }
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.is_null() ? std::nan("") : v.get<double>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("runtime_seconds")) r.runtime_seconds = j.at("runtime_seconds").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("report: ") + e.what());
  }
}

std::string comparison_to_json(const MethodComparison& c, bool include_runtime) {
  json j;
  j["schema"] = kReportSchema;
  j["constd"] = report_json(c.constd, include_runtime);
  j["nmf"] = json::array();
  for (const auto& n : c.nmf) j["nmf"].push_back(report_json(n, include_runtime));
  j["table"] = correlation_json(c.table);
  j["full"] = correlation_json(c.full);
  return dump(j);
}

std::string shuffle_to_json(const ShuffleResult& s, bool include_runtime) {
  json j;
  j["schema"] = kReportSchema;
  j["shared_r"] = s.shared_r;
  j["mean_shared_r"] = s.mean_shared_r;
  j["task_specific_r"] = s.task_specific_r;
  j["mean_task_specific_r"] = s.mean_task_specific_r;
  j["permutations"] = s.permutations;
  j["intact"] = report_json(s.intact, include_runtime);
  return dump(j);
}

std::string tensor_to_json(const TensorizedSet& ts) {
  json j;
  j["schema"] = kReportSchema;
  j["dims"] = {ts.tensor.dim(1), ts.tensor.dim(2), ts.tensor.dim(3)};
  j["layout"] = "mode-1 index fastest: offset = i + I1*(j + I2*k)";
  j["data"] = std::vector<double>(ts.tensor.data().begin(), ts.tensor.data().end());
  j["labels"] = json::array();
  for (const auto& l : ts.labels) j["labels"].push_back({{"task", l.task_id}, {"rep", l.repetition_id}});
  return dump(j);
}

std::string ground_truth_to_json(const SynthGroundTruth& truth, const SynthSpec& spec) {
  json j;
  j["schema"] = kReportSchema;
  j["synergies"] = columns_json(truth.synergies);
  j["shared_index"] = truth.synergies.cols() - 1;
  json snr = json::array();
  for (double v : truth.epoch_snr_db) snr.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["epoch_snr_db"] = snr;
  j["spec"] = {{"n_channels", spec.n_channels},   {"n_samples", spec.n_samples},
               {"n_tasks", spec.n_tasks},         {"reps_per_task", spec.reps_per_task},
               {"sample_rate", spec.sample_rate}, {"shared_gain", spec.shared_gain},
               {"gain_drift", spec.gain_drift},   {"shared_drift", spec.shared_drift},   {"gain_jitter", spec.gain_jitter},
               {"profile_jitter", spec.profile_jitter}, {"noise_sigma", spec.noise_sigma},
               {"exclusive_channels", spec.exclusive_channels}, {"length_jitter", spec.length_jitter},
               {"seed", spec.seed}};
  j["spec"]["snr_db"] = spec.snr_db ? json(*spec.snr_db) : json(nullptr);
  return dump(j);
}

std::string synergies_tsv(const SynergyReport& r) {
  std::string out = "channel";
  for (std::size_t s = 0; s < r.synergies.size(); ++s) {
    out += '\t';
    out += r.synergies[s].label;
    if (r.synergies[s].task_id) out += ":" + std::to_string(*r.synergies[s].task_id);
  }
  out += '\n';
  const Index rows = r.synergies.empty() ? 0 : r.synergies.front().weights.size();
  for (Index i = 0; i < rows; ++i) {
    out += "ch" + std::to_string(i + 1);
    for (const auto& s : r.synergies) out += '\t' + format_double(s.weights(i));
    out += '\n';
  }
  return out;
}

std::string temporal_tsv(const SynergyReport& r) {
  std::string out = "sample";
  for (Index c = 0; c < r.temporal.cols(); ++c) out += "\tcomponent" + std::to_string(c + 1);
  out += '\n';
  for (Index i = 0; i < r.temporal.rows(); ++i) {
    out += std::to_string(i);
    for (Index c = 0; c < r.temporal.cols(); ++c) out += '\t' + format_double(r.temporal(i, c));
    out += '\n';
  }
  return out;
}

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

}  // namespace synten
