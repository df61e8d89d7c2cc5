#include "calibre/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "calibre/cmo.hpp"
#include "calibre/error.hpp"
#include "calibre/file_util.hpp"
#include "calibre/kernels.hpp"
#include "calibre/metrics.hpp"
#include "calibre/parallel.hpp"
#include "calibre/random.hpp"

namespace calibre {
namespace {

// Acklam's rational approximation for the lower half, p in (0, 0.5].
double quantile_lower_half(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Halley step.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void summarize(SweepSeries& s) {
  s.mean.clear();
  s.sd.clear();
  for (const auto& row : s.values) {
    const double mu = sample_mean(row);
    s.mean.push_back(mu);
    s.sd.push_back(sample_sd(row, mu));
  }
}

SweepSeries empty_series(std::string metric, std::string kernel, std::size_t grid, int trials) {
  SweepSeries s;
  s.metric = std::move(metric);
  s.kernel = std::move(kernel);
  s.values.assign(grid, std::vector<double>(static_cast<std::size_t>(trials), 0.0));
  return s;
}

void check_options(const SweepOptions& o) {
  if (o.trials < 1) throw ValidationError("sweep needs at least one trial");
  if (o.grid_size < 1) throw ValidationError("sweep grid needs at least one point");
  if (o.n < 2) throw ValidationError("sweep datasets need at least two samples");
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_survival(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ValidationError("normal quantile argument must lie in [0, 1]");
  }
  if (p > 0.5) return -quantile_lower_half(1.0 - p);
  return quantile_lower_half(p);
}

std::vector<double> sample_truncnorm(double alpha, double sigma, std::size_t n, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw ValidationError("truncated normal scale must be positive");
  const double a = (-1.0 - alpha) / sigma;
  const double b = (1.0 - alpha) / sigma;
  const bool upper = a + b > 0.0;
  const double lo = upper ? normal_survival(a) : normal_cdf(a);
  const double hi = upper ? normal_survival(b) : normal_cdf(b);
  Rng rng(seed);
  std::vector<double> xs(n);
  for (auto& x : xs) {
    const double u = rng.uniform_open();
    const double z = upper ? -normal_quantile(lo - u * (lo - hi)) : normal_quantile(lo + u * (hi - lo));
    x = std::clamp(alpha + sigma * z, -1.0, 1.0);
  }
  return xs;
}

std::vector<double> generate_covariates(const SyntheticTask& task, std::uint64_t seed) {
  return sample_truncnorm(task.alpha, task.sigma, task.n, derive_seed(seed, 0));
}

namespace {

std::vector<int> draw_labels(const SyntheticTask& task, const std::vector<double>& xs, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 1));
  std::vector<int> labels(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) labels[i] = rng.uniform() < task.true_link(xs[i]) ? 1 : 0;
  return labels;
}

}  // namespace

PredictionSet generate(const SyntheticTask& task, std::uint64_t seed) {
  const auto xs = generate_covariates(task, seed);
  auto labels = draw_labels(task, xs, seed);
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(xs.size()), 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = task.model_link(xs[i]);
    probs(static_cast<Eigen::Index>(i), 0) = 1.0 - f;
    probs(static_cast<Eigen::Index>(i), 1) = f;
  }
  return PredictionSet(std::move(labels), std::move(probs));
}

PredictionSet generate_marginal(const SyntheticTask& task, std::uint64_t seed) {
  const auto xs = generate_covariates(task, seed);
  auto labels = draw_labels(task, xs, seed);
  double ones = 0.0;
  for (int y : labels) ones += y;
  const double rate = ones / static_cast<double>(labels.size());
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(xs.size()), 2);
  probs.col(0).setConstant(1.0 - rate);
  probs.col(1).setConstant(rate);
  return PredictionSet(std::move(labels), std::move(probs));
}

const SweepSeries& SweepResult::find(std::string_view metric, std::string_view kernel) const {
  for (const auto& s : series) {
    if (s.metric == metric && s.kernel == kernel) return s;
  }
  throw std::out_of_range("no sweep series " + std::string(metric) + "/" + std::string(kernel));
}

std::vector<double> alpha_grid(int grid_size) {
  if (grid_size < 1) throw ValidationError("sweep grid needs at least one point");
  if (grid_size == 1) return {0.0};
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  for (int k = 0; k < grid_size; ++k) grid[static_cast<std::size_t>(k)] = -1.0 + 2.0 * k / (grid_size - 1);
  return grid;
}

SweepResult covariate_shift_sweep(const SweepOptions& options, const std::vector<std::string>& metrics) {
  check_options(options);
  for (const auto& name : metrics) {
    if (name != "ckce" && name != "jkce" && name != "ece") throw ValidationError("unknown sweep metric '" + name + "'");
  }
  SweepResult result;
  result.experiment = "covariate-shift";
  result.alphas = alpha_grid(options.grid_size);
  result.trials = options.trials;
  result.n = options.n;
  result.seed = options.seed;
  const std::size_t grid = result.alphas.size();
  const auto trials = static_cast<std::size_t>(options.trials);
  result.gammas.assign(grid, std::vector<double>(trials, 0.0));
  for (const auto& name : metrics) result.series.push_back(empty_series(name, "combined", grid, options.trials));

  const KernelConfig kcfg{KernelFamily::combined, Bandwidth::median()};
  const EceConfig ececfg{};
  parallel_for(grid * trials, [&](std::size_t task_index) {
    const std::size_t g = task_index / trials;
    const std::size_t t = task_index % trials;
    SyntheticTask task = options.task;
    task.alpha = result.alphas[g];
    task.n = options.n;
    const std::uint64_t trial_seed = derive_seed(options.seed, t);
    const PredictionSet ps = generate(task, trial_seed);
    const ResolvedKernel rk = resolve_kernel(ps, kcfg, trial_seed);
    result.gammas[g][t] = rk.config.gamma.value();
    const double lambda = Regularization::automatic().resolve(ps.size());

    GramMatrix K = gram(rk.config, ps.columns());
    for (auto& s : result.series) {
      if (s.metric == "jkce") s.values[g][t] = jkce(ps, K);
      if (s.metric == "ece") s.values[g][t] = ece(ps, ececfg).value_or(std::nan(""));
    }
    for (auto& s : result.series) {
      if (s.metric == "ckce") s.values[g][t] = ckce(fit_dual(ps, K, lambda));
    }
  });
  for (auto& s : result.series) summarize(s);
  return result;
}

SweepResult kernel_robustness_sweep(const SweepOptions& options) {
  check_options(options);
  SweepResult result;
  result.experiment = "kernel-robustness";
  result.alphas = alpha_grid(options.grid_size);
  result.trials = options.trials;
  result.n = options.n;
  result.seed = options.seed;
  const std::size_t grid = result.alphas.size();
  const auto trials = static_cast<std::size_t>(options.trials);
  result.gammas.assign(grid, std::vector<double>(trials, 0.0));
  const KernelFamily families[] = {KernelFamily::linear, KernelFamily::gaussian, KernelFamily::combined};
  for (KernelFamily f : families) {
    result.series.push_back(empty_series("ckce", std::string(to_string(f)), grid, options.trials));
  }

  parallel_for(grid * trials, [&](std::size_t task_index) {
    const std::size_t g = task_index / trials;
    const std::size_t t = task_index % trials;
    SyntheticTask task = options.task;
    task.alpha = result.alphas[g];
    task.n = options.n;
    const std::uint64_t trial_seed = derive_seed(options.seed, t);
    const PredictionSet ps = generate(task, trial_seed);
    const ResolvedKernel rk = resolve_kernel(ps, KernelConfig{KernelFamily::combined, Bandwidth::median()}, trial_seed);
    const Bandwidth gamma = rk.config.gamma;
    result.gammas[g][t] = gamma.value();
    const double lambda = Regularization::automatic().resolve(ps.size());
    const Eigen::MatrixXd points = ps.columns();

    GramMatrix lin = gram({KernelFamily::linear, gamma}, points);
    GramMatrix gau = gram({KernelFamily::gaussian, gamma}, points);
    GramMatrix comb = gram({KernelFamily::combined, gamma}, points);
    if (comb.entries != lin.entries + gau.entries) {
      throw NumericError("combined Gram matrix differs from linear + gaussian");
    }
    result.series[0].values[g][t] = ckce(fit_dual(ps, std::move(lin), lambda));
    result.series[1].values[g][t] = ckce(fit_dual(ps, std::move(gau), lambda));
    result.series[2].values[g][t] = ckce(fit_dual(ps, std::move(comb), lambda));
  });
  for (auto& s : result.series) summarize(s);
  return result;
}

double spread(const SweepSeries& series) {
  if (series.mean.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(series.mean.begin(), series.mean.end());
  return (*hi - *lo) / sample_mean(series.mean);
}

bool dips_near_zero(const SweepResult& result, const SweepSeries& series) {
  if (series.mean.size() < 3) return false;
  std::size_t centre = 0;
  for (std::size_t k = 1; k < result.alphas.size(); ++k) {
    if (std::abs(result.alphas[k]) < std::abs(result.alphas[centre])) centre = k;
  }
  const double ends = 0.5 * (series.mean.front() + series.mean.back());
  return series.mean[centre] < ends;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out = "alpha,metric,kernel,trial,value\n";
  for (const auto& s : result.series) {
    for (std::size_t g = 0; g < result.alphas.size(); ++g) {
      for (std::size_t t = 0; t < s.values[g].size(); ++t) {
        out += format_double(result.alphas[g]) + ',' + s.metric + ',' + s.kernel + ',' + std::to_string(t) + ',' +
               format_double(s.values[g][t]) + '\n';
      }
    }
  }
  return out;
}

std::string sweep_summary_json(const SweepResult& result) {
  using nlohmann::json;
  json j;
  j["experiment"] = result.experiment;
  j["n"] = result.n;
  j["trials"] = result.trials;
  j["seed"] = result.seed;
  j["alpha"] = result.alphas;
  json series = json::array();
  for (const auto& s : result.series) {
    series.push_back({{"metric", s.metric},
                      {"kernel", s.kernel},
                      {"mean", s.mean},
                      {"sd", s.sd},
                      {"spread", spread(s)},
                      {"dips_near_zero", dips_near_zero(result, s)}});
  }
  j["series"] = series;
  json stability;
  if (result.experiment == "covariate-shift") {
    const SweepSeries* ck = nullptr;
    for (const auto& s : result.series) {
      if (s.metric == "ckce") ck = &s;
    }
    for (const auto& s : result.series) stability["spread_" + s.metric] = spread(s);
    if (ck) {
      const double base = spread(*ck);
      for (const auto& s : result.series) {
        if (&s != ck) stability["ratio_" + s.metric + "_to_ckce"] = spread(s) / base;
      }
    }
  } else {
    for (const auto& s : result.series) stability["spread_" + s.kernel] = spread(s);
  }
  j["stability"] = stability;
  j["gamma"] = result.gammas;
  return j.dump(2) + "\n";
}

}  // namespace calibre
