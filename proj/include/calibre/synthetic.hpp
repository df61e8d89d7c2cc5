#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "calibre/dataset.hpp"

namespace calibre {

double normal_cdf(double x);
/// Upper tail 1 - normal_cdf(x), accurate for large x.
double normal_survival(double x);
/// Inverse of normal_cdf on (0, 1). Rational initial guess refined by one
/// Halley step against erfc; relative error well below 1e-9.
double normal_quantile(double p);

/// n draws from N(alpha, sigma^2) truncated to [-1, 1] by inverse-CDF
/// sampling, x = alpha + sigma * Phi^-1(Phi(a) + u (Phi(b) - Phi(a))) with
/// a = (-1 - alpha) / sigma and b = (1 - alpha) / sigma. Intervals lying
/// mostly above the mean are evaluated through the upper tail, which is the
/// same map from u to x with less cancellation. Throws ValidationError for sigma <= 0.
std::vector<double> sample_truncnorm(double alpha, double sigma, std::size_t n, std::uint64_t seed);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Binary task on X = [-1, 1]: P(Y = 1 | x) = true_link(x), the model predicts
/// model_link(x), and X follows a truncated normal with location alpha.
/// Defaults give an overconfident model (slope 5 against slope 1).
struct SyntheticTask {
  std::function<double(double)> true_link = [](double x) { return sigmoid(x); };
  std::function<double(double)> model_link = [](double x) { return sigmoid(5.0 * x); };
  double alpha = 0.0;
  double sigma = 0.25;
  std::size_t n = 1000;
};

/// Covariates come from sample_truncnorm(alpha, sigma, n, derive_seed(seed, 0));
/// label uniforms from stream derive_seed(seed, 1). Row i is
/// (1 - model_link(x_i), model_link(x_i)); label 1 means Y = 1.
PredictionSet generate(const SyntheticTask& task, std::uint64_t seed);

/// Same covariates and labels as generate(), but every prediction is the
/// empirical label marginal of the generated sample.
PredictionSet generate_marginal(const SyntheticTask& task, std::uint64_t seed);

/// Covariates used by generate(task, seed).
std::vector<double> generate_covariates(const SyntheticTask& task, std::uint64_t seed);

/// `trials` values of one metric at every grid point.
struct SweepSeries {
  std::string metric;
  std::string kernel;
  std::vector<std::vector<double>> values;  // [grid point][trial]
  std::vector<double> mean;
  std::vector<double> sd;  // sample standard deviation, 0 for a single trial
};

struct SweepResult {
  std::string experiment;       // covariate-shift | kernel-robustness
  std::vector<double> alphas;   // strictly increasing
  std::vector<SweepSeries> series;
  std::vector<std::vector<double>> gammas;  // median bandwidth per [grid point][trial]
  int trials = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  /// Throws std::out_of_range when absent.
  const SweepSeries& find(std::string_view metric, std::string_view kernel) const;
};

struct SweepOptions {
  int trials = 20;
  std::size_t n = 1000;
  int grid_size = 25;
  std::uint64_t seed = 0;
  SyntheticTask task{};  // alpha is overwritten per grid point
};

/// Evenly spaced locations from -1 to 1 (a single point is 0).
std::vector<double> alpha_grid(int grid_size);

/// Trial t at every grid point uses seed derive_seed(options.seed, t), so the
/// curves differ only through alpha. Each dataset gets its own median
/// bandwidth, lambda = n^(-1/4), the combined kernel and the exact dual solve.
/// `metrics` is a subset of {"ckce", "jkce", "ece"}.
SweepResult covariate_shift_sweep(const SweepOptions& options,
                                  const std::vector<std::string>& metrics = {"ckce", "jkce", "ece"});

/// CKCE under the linear, gaussian and combined kernels on the same datasets.
/// The combined Gram matrix is checked to equal linear + gaussian entrywise.
SweepResult kernel_robustness_sweep(const SweepOptions& options);

/// (max_alpha mean - min_alpha mean) / grand mean of a series.
double spread(const SweepSeries& series);

/// True when the trial mean at the alpha nearest 0 is below the average of
/// the two endpoint means.
bool dips_near_zero(const SweepResult& result, const SweepSeries& series);

/// Long-format CSV: alpha,metric,kernel,trial,value.
std::string sweep_to_csv(const SweepResult& result);
/// Grid, per-series means, standard deviations and spreads, plus the
/// stability statistics of the experiment.
std::string sweep_summary_json(const SweepResult& result);

}  // namespace calibre
