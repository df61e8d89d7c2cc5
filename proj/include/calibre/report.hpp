#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace calibre {

/// Resolved settings a report was computed with.
struct ReportConfig {
  std::string kernel = "combined";
  std::optional<double> gamma;          // absent for the linear kernel
  std::string gamma_source = "median";  // fixed | median | median-degenerate | none
  double lambda = 0.0;
  std::string lambda_source = "auto";   // fixed | auto
  std::string mode = "exact_dual";      // exact_dual | rff_primal
  std::optional<int> rff_features;      // present in rff_primal mode
  std::uint64_t seed = 0;
  int ece_bins_per_dim = 0;
  int ece_min_count = 0;
  std::string jkce_kernel = "exact";    // exact | rff
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::string input;

  bool operator==(const ReportConfig&) const = default;
};

/// One model evaluated on one calibration set.
struct MetricReport {
  double ckce = 0.0;
  double jkce = 0.0;
  std::optional<double> ece;  // absent when simplex binning is infeasible
  double accuracy = 0.0;
  double cross_entropy = 0.0;
  double brier = 0.0;
  ReportConfig config;

  bool operator==(const MetricReport&) const = default;
};

enum class ReportFormat { json, csv };

/// json unless the extension is ".csv".
ReportFormat report_format_from_path(const std::filesystem::path& path);

/// JSON: one object with keys ckce, jkce, ece, accuracy, cross_entropy, brier, config
/// (an array of such objects when several reports are written). CSV: header
/// plus one row per report. Reals use the shortest round-trip decimal form;
/// an absent ECE is JSON null or an empty CSV cell. Writes are atomic.
void save_reports(const std::vector<MetricReport>& reports, const std::filesystem::path& path, ReportFormat format);
void save_report(const MetricReport& report, const std::filesystem::path& path, ReportFormat format);

std::vector<MetricReport> load_reports(const std::filesystem::path& path, ReportFormat format);
MetricReport load_report(const std::filesystem::path& path, ReportFormat format);

std::string reports_to_json(const std::vector<MetricReport>& reports);
std::string reports_to_csv(const std::vector<MetricReport>& reports);
std::vector<MetricReport> reports_from_json(std::string_view text);
std::vector<MetricReport> reports_from_csv(std::string_view text);

}  // namespace calibre
