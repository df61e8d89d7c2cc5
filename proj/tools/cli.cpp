#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "calibre/dataset.hpp"
#include "calibre/error.hpp"
#include "calibre/file_util.hpp"
#include "calibre/metrics.hpp"
#include "calibre/report.hpp"
#include "calibre/synthetic.hpp"

namespace calibre::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kRffCrossover = 5000;

struct Options {
  std::vector<std::string> inputs;
  std::string input_format = "auto";
  std::optional<double> renormalize_tol;
  std::string kernel = "combined";
  std::string gamma = "median";
  std::string lambda = "auto";
  std::string mode = "auto";
  int rff_d = 100;
  std::optional<std::uint64_t> seed;
  std::optional<int> ece_bins;
  int ece_min_count = 0;
  std::string output;
  std::string format = "auto";
  std::string summary;
  int trials = 20;
  std::size_t n = 1000;
  int grid = 25;
  int bins = 15;
};

/// Failure tagged with the pipeline stage it happened in.
struct StageFailure {
  std::string stage;
  int code;
  std::string message;
};

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const IoError& e) {
    throw StageFailure{stage, kIoFailure, e.what()};
  } catch (const ValidationError& e) {
    throw StageFailure{stage, kValidationFailure, e.what()};
  } catch (const NumericError& e) {
    throw StageFailure{stage, kNumericFailure, e.what()};
  }
}

std::uint64_t resolve_seed(const Options& o, std::ostream& err) {
  if (o.seed) return *o.seed;
  std::random_device rd;
  const std::uint64_t seed = (std::uint64_t{rd()} << 32) ^ rd();
  err << "seed: " << seed << " (pass --seed " << seed << " to reproduce)\n";
  return seed;
}

KernelConfig kernel_config(const Options& o) {
  KernelConfig k;
  k.family = parse_kernel_family(o.kernel);
  if (o.gamma != "median") {
    const auto v = parse_double(o.gamma);
    if (!v) throw ValidationError("--gamma must be 'median' or a positive number");
    k.gamma = Bandwidth::fixed(*v);
  }
  return k;
}

Regularization regularization(const Options& o) {
  if (o.lambda == "auto") return Regularization::automatic();
  const auto v = parse_double(o.lambda);
  if (!v) throw ValidationError("--lambda must be 'auto' or a positive number");
  return Regularization::fixed(*v);
}

PredictionSet load_input(const Options& o, const std::string& path) {
  const PredictionFormat fmt = o.input_format == "auto" ? prediction_format_from_path(path)
                               : o.input_format == "csv" ? PredictionFormat::csv
                                                         : PredictionFormat::jsonl;
  if (o.renormalize_tol) {
    auto raw = load_raw_predictions(path, fmt);
    return renormalize(raw.labels, raw.probs, *o.renormalize_tol);
  }
  return load_predictions(path, fmt);
}

ReportFormat report_format(const Options& o) {
  if (o.format == "json") return ReportFormat::json;
  if (o.format == "csv") return ReportFormat::csv;
  return o.output.empty() ? ReportFormat::json : report_format_from_path(o.output);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

int run_compute(const Options& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o, err);
  const KernelConfig kcfg = in_stage("config", [&] { return kernel_config(o); });
  EstimatorConfig ecfg;
  ecfg.lambda = in_stage("config", [&] { return regularization(o); });
  ecfg.rff_features = o.rff_d;
  ecfg.seed = seed;
  EceConfig ececfg;
  ececfg.bins_per_dim = o.ece_bins;
  ececfg.min_count = o.ece_min_count;

  std::vector<PredictionSet> sets;
  for (const auto& path : o.inputs) sets.push_back(in_stage("load", [&] { return load_input(o, path); }));

  std::vector<MetricReport> reports;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    EstimatorConfig e = ecfg;
    if (o.mode == "auto") {
      e.mode = sets[k].size() > kRffCrossover ? EstimatorMode::rff_primal : EstimatorMode::exact_dual;
    } else {
      e.mode = in_stage("config", [&] { return parse_estimator_mode(o.mode); });
    }
    MetricReport r = in_stage("compute", [&] { return report(sets[k], kcfg, e, ececfg); });
    r.config.input = o.inputs[k];
    reports.push_back(std::move(r));
  }

  std::ostream& summary = o.output.empty() ? err : out;
  for (const auto& r : reports) {
    summary << r.config.input << ": ckce=" << fmt(r.ckce) << " jkce=" << fmt(r.jkce)
            << " ece=" << (r.ece ? fmt(*r.ece) : std::string("n/a")) << " accuracy=" << fmt(r.accuracy)
            << " cross_entropy=" << fmt(r.cross_entropy) << " brier=" << fmt(r.brier) << " (" << r.config.mode
            << ", n=" << r.config.n << ", m=" << r.config.m << ")\n";
  }
  if (reports.size() > 1) {
    std::vector<std::size_t> order(reports.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return reports[a].ckce < reports[b].ckce; });
    summary << "ckce ranking (best first):";
    for (std::size_t k : order) summary << ' ' << reports[k].config.input;
    summary << '\n';
  }

  const ReportFormat rf = report_format(o);
  if (o.output.empty()) {
    out << (rf == ReportFormat::json ? reports_to_json(reports) : reports_to_csv(reports));
  } else {
    in_stage("write", [&] { save_reports(reports, o.output, rf); });
  }
  return kOk;
}

SweepOptions sweep_options(const Options& o, std::uint64_t seed) {
  if (o.trials < 1) throw ValidationError("--trials must be at least 1");
  if (o.grid < 1) throw ValidationError("--grid must be at least 1");
  if (o.n < 2) throw ValidationError("--n must be at least 2");
  SweepOptions s;
  s.trials = o.trials;
  s.n = o.n;
  s.grid_size = o.grid;
  s.seed = seed;
  return s;
}

int run_sweep(const Options& o, bool kernel_sweep, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o, err);
  const SweepOptions options = in_stage("config", [&] { return sweep_options(o, seed); });
  const SweepResult result = in_stage("sweep", [&] {
    return kernel_sweep ? kernel_robustness_sweep(options) : covariate_shift_sweep(options);
  });

  const fs::path csv_path = o.output.empty() ? fs::path(kernel_sweep ? "sweep-kernel.csv" : "sweep-shift.csv")
                                             : fs::path(o.output);
  fs::path summary_path = o.summary;
  if (summary_path.empty()) {
    summary_path = csv_path;
    summary_path.replace_extension(".summary.json");
  }
  in_stage("write", [&] {
    write_file_atomic(csv_path, sweep_to_csv(result));
    write_file_atomic(summary_path, sweep_summary_json(result));
  });

  out << result.experiment << ": " << result.alphas.size() << " alpha values x " << result.trials
      << " trials, n=" << result.n << ", seed=" << result.seed << '\n';
  for (const auto& s : result.series) {
    out << "  " << s.metric << '/' << s.kernel << " spread=" << fmt(spread(s))
        << (dips_near_zero(result, s) ? " (dips near alpha=0)" : "") << '\n';
  }
  out << "wrote " << csv_path.string() << " and " << summary_path.string() << '\n';
  return kOk;
}

int run_reliability(const Options& o, std::ostream& out, std::ostream& /*err*/) {
  if (o.inputs.size() != 1) throw StageFailure{"config", kValidationFailure, "reliability takes exactly one --input"};
  const PredictionSet ps = in_stage("load", [&] { return load_input(o, o.inputs.front()); });
  const ReliabilityData data = in_stage("compute", [&] { return reliability(ps, o.bins); });
  std::string csv = "bin_lo,bin_hi,mean_confidence,accuracy,count\n";
  for (const auto& b : data.bins) {
    csv += format_double(b.lo) + ',' + format_double(b.hi) + ',';
    if (b.count > 0) csv += format_double(b.mean_confidence) + ',' + format_double(b.accuracy);
    else csv += ',';
    csv += ',' + std::to_string(b.count) + '\n';
  }
  if (o.output.empty()) {
    out << csv;
  } else {
    in_stage("write", [&] { write_file_atomic(o.output, csv); });
    out << "wrote " << data.bins.size() << " bins for " << ps.size() << " samples to " << o.output << '\n';
  }
  return kOk;
}

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--input,-i", o.inputs, "Prediction dump (.csv or .jsonl); repeat to compare models")->required();
  cmd->add_option("--input-format", o.input_format, "auto | csv | jsonl")
      ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  cmd->add_option("--renormalize", o.renormalize_tol,
                  "Divide rows by their sum when within this tolerance of 1 (at most 1e-2)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Calibration error of probabilistic classifiers (CKCE, JKCE, ECE and proper scores)", "calibre"};
  app.require_subcommand(1);

  auto* compute = app.add_subcommand("compute", "Metric report for one or more prediction dumps");
  add_model_flags(compute, o);
  compute->add_option("--kernel", o.kernel, "linear | gaussian | combined")
      ->check(CLI::IsMember({"linear", "gaussian", "combined"}));
  compute->add_option("--gamma", o.gamma, "Bandwidth: 'median' or a positive number");
  compute->add_option("--lambda", o.lambda, "Regularization: 'auto' (n^-1/4) or a positive number");
  compute->add_option("--mode", o.mode, "auto | exact | rff (auto uses rff above 5000 samples)")
      ->check(CLI::IsMember({"auto", "exact", "exact_dual", "dual", "rff", "rff_primal", "primal"}));
  compute->add_option("--rff-d", o.rff_d, "Number of random Fourier features")->check(CLI::PositiveNumber);
  compute->add_option("--seed", o.seed, "Seed for bandwidth subsampling and Fourier features");
  compute->add_option("--ece-bins", o.ece_bins, "ECE bins per simplex coordinate")->check(CLI::PositiveNumber);
  compute->add_option("--ece-min-count", o.ece_min_count, "Drop ECE bins with fewer samples")
      ->check(CLI::NonNegativeNumber);
  compute->add_option("--output,-o", o.output, "Report path (.json or .csv); stdout when omitted");
  compute->add_option("--format", o.format, "auto | json | csv")->check(CLI::IsMember({"auto", "json", "csv"}));

  auto* shift = app.add_subcommand("sweep-shift", "Covariate-shift experiment on the synthetic binary task");
  auto* kern = app.add_subcommand("sweep-kernel", "CKCE under linear, gaussian and combined kernels");
  for (auto* cmd : {shift, kern}) {
    cmd->add_option("--trials", o.trials, "Trials per alpha value")->check(CLI::PositiveNumber);
    cmd->add_option("--n", o.n, "Samples per dataset")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    cmd->add_option("--grid", o.grid, "Number of alpha values in [-1, 1]")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--output,-o", o.output, "Long-format CSV path");
    cmd->add_option("--summary", o.summary, "JSON summary path (default: <output>.summary.json)");
  }

  auto* rel = app.add_subcommand("reliability", "Reliability-diagram data for one prediction dump");
  add_model_flags(rel, o);
  rel->add_option("--bins", o.bins, "Confidence bins on [1/m, 1]")->check(CLI::PositiveNumber);
  rel->add_option("--output,-o", o.output, "CSV path; stdout when omitted");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationFailure;
  }

  try {
    if (*compute) return run_compute(o, out, err);
    if (*shift) return run_sweep(o, false, out, err);
    if (*kern) return run_sweep(o, true, out, err);
    if (*rel) return run_reliability(o, out, err);
  } catch (const StageFailure& f) {
    err << "calibre: " << f.stage << ": " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    err << "calibre: " << e.what() << '\n';
    return kNumericFailure;
  }
  return kValidationFailure;
}

}  // namespace calibre::cli
