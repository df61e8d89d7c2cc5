#include "calibre/report.hpp"

#include <charconv>

#include <json.hpp>

#include "calibre/error.hpp"
#include "calibre/file_util.hpp"

namespace calibre {
namespace {

using nlohmann::json;

const std::vector<std::string> kCsvColumns = {
    "ckce",  "jkce",          "ece",    "accuracy", "cross_entropy", "brier",           "kernel",
    "gamma", "gamma_source",  "lambda", "lambda_source", "mode",     "rff_features",    "seed",
    "ece_bins_per_dim", "ece_min_count", "jkce_kernel", "n", "m",    "input"};

// Raw numbers keep nlohmann's shortest round-trip output, so 0.061 stays "0.061".
json config_to_json(const ReportConfig& c) {
  json j;
  j["kernel"] = c.kernel;
  j["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  j["gamma_source"] = c.gamma_source;
  j["lambda"] = c.lambda;
  j["lambda_source"] = c.lambda_source;
  j["mode"] = c.mode;
  j["rff_features"] = c.rff_features ? json(*c.rff_features) : json(nullptr);
  j["seed"] = c.seed;
  j["ece_bins_per_dim"] = c.ece_bins_per_dim;
  j["ece_min_count"] = c.ece_min_count;
  j["jkce_kernel"] = c.jkce_kernel;
  j["n"] = c.n;
  j["m"] = c.m;
  j["input"] = c.input;
  return j;
}

json report_to_json(const MetricReport& r) {
  json j;
  j["ckce"] = r.ckce;
  j["jkce"] = r.jkce;
  j["ece"] = r.ece ? json(*r.ece) : json(nullptr);
  j["accuracy"] = r.accuracy;
  j["cross_entropy"] = r.cross_entropy;
  j["brier"] = r.brier;
  j["config"] = config_to_json(r.config);
  return j;
}

double req_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw ParseError(std::string("report field '") + key + "' missing");
  return j[key].get<double>();
}

std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw ParseError(std::string("report field '") + key + "' is not a number");
  return j[key].get<double>();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("report field '") + key + "' has the wrong type");
  }
}

MetricReport report_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("report must be a JSON object");
  MetricReport r;
  r.ckce = req_number(j, "ckce");
  r.jkce = req_number(j, "jkce");
  r.ece = opt_number(j, "ece");
  r.accuracy = req_number(j, "accuracy");
  r.cross_entropy = req_number(j, "cross_entropy");
  r.brier = req_number(j, "brier");
  if (j.contains("config")) {
    const json& c = j["config"];
    ReportConfig& cfg = r.config;
    cfg.kernel = get_or<std::string>(c, "kernel", cfg.kernel);
    cfg.gamma = opt_number(c, "gamma");
    cfg.gamma_source = get_or<std::string>(c, "gamma_source", cfg.gamma_source);
    cfg.lambda = get_or<double>(c, "lambda", cfg.lambda);
    cfg.lambda_source = get_or<std::string>(c, "lambda_source", cfg.lambda_source);
    cfg.mode = get_or<std::string>(c, "mode", cfg.mode);
    if (c.contains("rff_features") && !c["rff_features"].is_null()) cfg.rff_features = c["rff_features"].get<int>();
    cfg.seed = get_or<std::uint64_t>(c, "seed", cfg.seed);
    cfg.ece_bins_per_dim = get_or<int>(c, "ece_bins_per_dim", cfg.ece_bins_per_dim);
    cfg.ece_min_count = get_or<int>(c, "ece_min_count", cfg.ece_min_count);
    cfg.jkce_kernel = get_or<std::string>(c, "jkce_kernel", cfg.jkce_kernel);
    cfg.n = get_or<std::uint64_t>(c, "n", cfg.n);
    cfg.m = get_or<std::uint64_t>(c, "m", cfg.m);
    cfg.input = get_or<std::string>(c, "input", cfg.input);
  }
  return r;
}

// CSV cells: inputs may carry commas or quotes, so quote when needed.
std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

double cell_number(const std::string& s, const char* column) {
  const auto v = parse_double(s);
  if (!v) throw ParseError(std::string("report column '") + column + "' is not a number");
  return *v;
}

std::optional<double> cell_optional(const std::string& s, const char* column) {
  if (s.empty()) return std::nullopt;
  return cell_number(s, column);
}

std::uint64_t cell_unsigned(const std::string& s, const char* column) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(std::string("report column '") + column + "' is not an unsigned integer");
  }
  return v;
}

int cell_int(const std::string& s, const char* column) {
  const auto v = parse_integer(s);
  if (!v) throw ParseError(std::string("report column '") + column + "' is not an integer");
  return static_cast<int>(*v);
}

}  // namespace

ReportFormat report_format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::csv : ReportFormat::json;
}

std::string reports_to_json(const std::vector<MetricReport>& reports) {
  if (reports.size() == 1) return report_to_json(reports.front()).dump(2) + "\n";
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<MetricReport>& reports) {
  std::string out;
  for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
    if (k) out += ',';
    out += kCsvColumns[k];
  }
  out += '\n';
  for (const auto& r : reports) {
    const auto& c = r.config;
    const std::vector<std::string> cells = {
        format_double(r.ckce),
        format_double(r.jkce),
        r.ece ? format_double(*r.ece) : "",
        format_double(r.accuracy),
        format_double(r.cross_entropy),
        format_double(r.brier),
        csv_escape(c.kernel),
        c.gamma ? format_double(*c.gamma) : "",
        csv_escape(c.gamma_source),
        format_double(c.lambda),
        csv_escape(c.lambda_source),
        csv_escape(c.mode),
        c.rff_features ? std::to_string(*c.rff_features) : "",
        std::to_string(c.seed),
        std::to_string(c.ece_bins_per_dim),
        std::to_string(c.ece_min_count),
        csv_escape(c.jkce_kernel),
        std::to_string(c.n),
        std::to_string(c.m),
        csv_escape(c.input)};
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  }
  return out;
}

std::vector<MetricReport> reports_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what());
  }
  std::vector<MetricReport> out;
  if (doc.is_array()) {
    for (const auto& item : doc) out.push_back(report_from_json(item));
  } else {
    out.push_back(report_from_json(doc));
  }
  return out;
}

std::vector<MetricReport> reports_from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw ParseError("empty report file");
  if (csv_split(lines[0]) != kCsvColumns) throw ParseError("unexpected report CSV header");
  std::vector<MetricReport> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = csv_split(lines[i]);
    if (cells.size() != kCsvColumns.size()) throw ParseError("report CSV row has the wrong number of cells");
    MetricReport r;
    r.ckce = cell_number(cells[0], "ckce");
    r.jkce = cell_number(cells[1], "jkce");
    r.ece = cell_optional(cells[2], "ece");
    r.accuracy = cell_number(cells[3], "accuracy");
    r.cross_entropy = cell_number(cells[4], "cross_entropy");
    r.brier = cell_number(cells[5], "brier");
    auto& c = r.config;
    c.kernel = cells[6];
    c.gamma = cell_optional(cells[7], "gamma");
    c.gamma_source = cells[8];
    c.lambda = cell_number(cells[9], "lambda");
    c.lambda_source = cells[10];
    c.mode = cells[11];
    if (!cells[12].empty()) c.rff_features = cell_int(cells[12], "rff_features");
    c.seed = cell_unsigned(cells[13], "seed");
    c.ece_bins_per_dim = cell_int(cells[14], "ece_bins_per_dim");
    c.ece_min_count = cell_int(cells[15], "ece_min_count");
    c.jkce_kernel = cells[16];
    c.n = cell_unsigned(cells[17], "n");
    c.m = cell_unsigned(cells[18], "m");
    c.input = cells[19];
    out.push_back(std::move(r));
  }
  return out;
}

void save_reports(const std::vector<MetricReport>& reports, const std::filesystem::path& path, ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::json ? reports_to_json(reports) : reports_to_csv(reports));
}

void save_report(const MetricReport& report, const std::filesystem::path& path, ReportFormat format) {
  save_reports({report}, path, format);
}

std::vector<MetricReport> load_reports(const std::filesystem::path& path, ReportFormat format) {
  const std::string text = read_file(path);
  return format == ReportFormat::json ? reports_from_json(text) : reports_from_csv(text);
}

MetricReport load_report(const std::filesystem::path& path, ReportFormat format) {
  auto all = load_reports(path, format);
  if (all.size() != 1) throw ParseError("expected exactly one report in '" + path.string() + "'");
  return all.front();
}

}  // namespace calibre
