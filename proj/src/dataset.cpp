#include "calibre/dataset.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "calibre/error.hpp"
#include "calibre/file_util.hpp"

namespace calibre {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string_view::npos) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

int checked_label(long long value, std::size_t line_no) {
  if (value < 0 || value > 1'000'000'000) {
    throw ValidationError("line " + std::to_string(line_no) + ": label " + std::to_string(value) +
                          " out of range");
  }
  return static_cast<int>(value);
}

RawPredictions parse_csv_raw(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty prediction file");

  const auto header = split_fields(lines[0]);
  if (header.size() < 3 || strip(header[0]) != "label") {
    throw ParseError("header must be 'label,p0,p1,...'");
  }
  const std::size_t m = header.size() - 1;
  for (std::size_t j = 0; j < m; ++j) {
    if (strip(header[j + 1]) != "p" + std::to_string(j)) {
      throw ParseError("header column " + std::to_string(j + 2) + " must be 'p" + std::to_string(j) + "'");
    }
  }
  if (lines.size() < 2) throw ParseError("prediction file has a header but no rows");

  RawPredictions raw;
  const std::size_t n = lines.size() - 1;
  raw.labels.reserve(n);
  raw.probs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t line_no = i + 2;
    const auto fields = split_fields(lines[i + 1]);
    if (fields.size() != m + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(m + 1) +
                       " fields, found " + std::to_string(fields.size()));
    }
    const auto label = parse_integer(fields[0]);
    if (!label) throw ParseError("line " + std::to_string(line_no) + ": label is not an integer");
    raw.labels.push_back(checked_label(*label, line_no));
    for (std::size_t j = 0; j < m; ++j) {
      const auto v = parse_double(fields[j + 1]);
      if (!v) {
        throw ParseError("line " + std::to_string(line_no) + ": field " + std::to_string(j + 2) +
                         " is not a number");
      }
      raw.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return raw;
}

RawPredictions parse_jsonl_raw(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (strip(lines[i]).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("label") || !obj.contains("probs")) {
      throw ParseError("line " + std::to_string(line_no) + ": expected object with 'label' and 'probs'");
    }
    const auto& label = obj["label"];
    if (!label.is_number_integer()) throw ParseError("line " + std::to_string(line_no) + ": label is not an integer");
    const auto& probs = obj["probs"];
    if (!probs.is_array()) throw ParseError("line " + std::to_string(line_no) + ": probs is not an array");
    std::vector<double> row;
    row.reserve(probs.size());
    for (const auto& v : probs) {
      if (!v.is_number()) throw ParseError("line " + std::to_string(line_no) + ": probs entry is not a number");
      row.push_back(v.get<double>());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                       " probabilities, found " + std::to_string(row.size()));
    }
    if (row.size() < 2) throw ParseError("line " + std::to_string(line_no) + ": need at least 2 classes");
    labels.push_back(checked_label(label.get<long long>(), line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty prediction file");

  RawPredictions raw;
  raw.labels = std::move(labels);
  raw.probs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      raw.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return raw;
}

}  // namespace

PredictionSet::PredictionSet(std::vector<int> labels, Eigen::MatrixXd probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
  const auto n = static_cast<Eigen::Index>(labels_.size());
  if (n < 1) throw ValidationError("prediction set must contain at least one sample");
  if (probs_.rows() != n) {
    throw ValidationError("label count " + std::to_string(n) + " does not match prediction rows " +
                          std::to_string(probs_.rows()));
  }
  const Eigen::Index m = probs_.cols();
  if (m < 2) throw ValidationError("need at least 2 classes");
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels_[static_cast<std::size_t>(i)];
    if (y < 0 || y >= m) {
      throw ValidationError("row " + std::to_string(i + 1) + ": label " + std::to_string(y) + " outside [0, " +
                            std::to_string(m) + ")");
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double p = probs_(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("row " + std::to_string(i + 1) + ": probability " + format_double(p) +
                              " outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw ValidationError("row " + std::to_string(i + 1) + ": probabilities sum to " + format_double(sum) +
                            ", not 1");
    }
  }
}

PredictionSet PredictionSet::select(std::span<const std::size_t> indices) const {
  std::vector<int> labels;
  labels.reserve(indices.size());
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(indices.size()), probs_.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    labels.push_back(labels_.at(indices[k]));
    probs.row(static_cast<Eigen::Index>(k)) = probs_.row(static_cast<Eigen::Index>(indices[k]));
  }
  return PredictionSet(std::move(labels), std::move(probs));
}

PredictionFormat prediction_format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return PredictionFormat::csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return PredictionFormat::jsonl;
  throw ValidationError("cannot infer prediction format from '" + path.string() + "' (use .csv or .jsonl)");
}

PredictionSet parse_predictions_csv(std::string_view text) {
  auto raw = parse_csv_raw(text);
  return PredictionSet(std::move(raw.labels), std::move(raw.probs));
}

PredictionSet parse_predictions_jsonl(std::string_view text) {
  auto raw = parse_jsonl_raw(text);
  return PredictionSet(std::move(raw.labels), std::move(raw.probs));
}

RawPredictions load_raw_predictions(const std::filesystem::path& path, PredictionFormat format) {
  const std::string text = read_file(path);
  return format == PredictionFormat::csv ? parse_csv_raw(text) : parse_jsonl_raw(text);
}

PredictionSet load_predictions(const std::filesystem::path& path, PredictionFormat format) {
  auto raw = load_raw_predictions(path, format);
  return PredictionSet(std::move(raw.labels), std::move(raw.probs));
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  return load_predictions(path, prediction_format_from_path(path));
}

void save_predictions(const PredictionSet& ps, const std::filesystem::path& path, PredictionFormat format) {
  const auto& P = ps.probs();
  std::string out;
  if (format == PredictionFormat::csv) {
    out += "label";
    for (Eigen::Index j = 0; j < P.cols(); ++j) out += ",p" + std::to_string(j);
    out += '\n';
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      out += std::to_string(ps.label(static_cast<std::size_t>(i)));
      for (Eigen::Index j = 0; j < P.cols(); ++j) {
        out += ',';
        out += format_double(P(i, j));
      }
      out += '\n';
    }
  } else {
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      out += "{\"label\":" + std::to_string(ps.label(static_cast<std::size_t>(i))) + ",\"probs\":[";
      for (Eigen::Index j = 0; j < P.cols(); ++j) {
        if (j) out += ',';
        out += format_double(P(i, j));
      }
      out += "]}\n";
    }
  }
  write_file_atomic(path, out);
}

PredictionSet renormalize(const std::vector<int>& labels, const Eigen::MatrixXd& probs, double tol) {
  if (!(tol >= 0.0 && tol <= 1e-2)) throw ValidationError("renormalize tolerance must lie in [0, 1e-2]");
  Eigen::MatrixXd out = probs;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double sum = out.row(i).sum();
    if (!(sum > 0.0)) throw ValidationError("row " + std::to_string(i + 1) + ": non-positive row sum");
    if (std::abs(sum - 1.0) > tol) {
      throw ValidationError("row " + std::to_string(i + 1) + ": row sum " + format_double(sum) +
                            " deviates from 1 by more than " + format_double(tol));
    }
    out.row(i) /= sum;
  }
  return PredictionSet(labels, std::move(out));
}

PredictionSet renormalize(const PredictionSet& ps, double tol) {
  return renormalize(ps.labels(), ps.probs(), tol);
}

}  // namespace calibre
