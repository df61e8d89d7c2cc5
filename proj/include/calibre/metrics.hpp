#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "calibre/cmo.hpp"
#include "calibre/dataset.hpp"
#include "calibre/kernels.hpp"
#include "calibre/report.hpp"
#include "calibre/rff.hpp"

namespace calibre {

/// Residual matrix R = Z - Y1 (m x n): column i is q_i - e_{y_i}.
Eigen::MatrixXd residuals(const PredictionSet& ps);

/// G = R^T R, i.e. G_ij = q_i.q_j + 1{y_i = y_j} - q_i[y_j] - q_j[y_i].
/// This is M_Z*M_Z + L_YY - M_Z*Psi_Y - Psi_Y*M_Z under the Kronecker label kernel.
Eigen::MatrixXd discrepancy_matrix(const PredictionSet& ps);

struct ResolvedKernel {
  KernelConfig config;
  std::string gamma_source;  // fixed | median | median-degenerate | none
};

/// Resolves a median bandwidth on the predictions. When every prediction row
/// is identical the Gaussian part is the constant 1 for any bandwidth, so
/// gamma = 1 is used and tagged "median-degenerate" instead of failing.
ResolvedKernel resolve_kernel(const PredictionSet& ps, const KernelConfig& kcfg, std::uint64_t seed);

/// Values in [-kCkceClampTolerance, 0) are reported as 0.
inline constexpr double kCkceClampTolerance = 1e-10;

/// CKCE from a dual fit: Tr(W G W K).
double ckce(const DualCmo& fit);
/// CKCE from a primal fit: |A_Z - A_Y|_F^2.
double ckce(const PrimalCmo& fit);

/// Conditional kernel calibration error. Resolves a median bandwidth
/// (seeded by ecfg.seed) and lambda, then uses the dual solve or, in
/// rff_primal mode, a make_rff(m, ecfg.rff_features, gamma, ecfg.seed) map.
double ckce(const PredictionSet& ps, const KernelConfig& kcfg, const EstimatorConfig& ecfg);

/// Unbiased JKCE: (1 / (n (n - 1))) sum_{i != j} k(q_i, q_j) G_ij. May be negative.
/// Throws ValidationError for n < 2.
double jkce(const PredictionSet& ps, const KernelConfig& kcfg, std::uint64_t seed = 0);
double jkce(const PredictionSet& ps, const GramMatrix& gram);
/// Same statistic under the feature-induced kernel phi(p).phi(q), in O(n dim m).
double jkce(const PredictionSet& ps, const RffMap& map);

/// Largest class count for which simplex binning is attempted.
inline constexpr int kEceMaxClasses = 8;

struct EceConfig {
  std::optional<int> bins_per_dim;  // default_ece_bins(m) when absent
  int min_count = 0;                // bins with fewer samples are dropped
};

/// 15 for m = 2, 10 for m = 3, 5 for 4 <= m <= 8.
int default_ece_bins(int classes);

/// ECE with uniform simplex binning and the L1 distance. Returns nullopt when
/// m > kEceMaxClasses or when no bin survives min_count.
std::optional<double> ece(const PredictionSet& ps, const EceConfig& cfg = {});

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;  // 0 for empty bins
  double accuracy = 0.0;         // 0 for empty bins
};

struct ReliabilityData {
  std::vector<ReliabilityBin> bins;
};

/// Confidence (top-class probability) histogram on [1/m, 1] with uniform bins.
ReliabilityData reliability(const PredictionSet& ps, int bins);

struct ProperScores {
  double accuracy = 0.0;
  double cross_entropy = 0.0;
  double brier = 0.0;
};

/// Cross-entropy clamps probabilities at this floor.
inline constexpr double kProbabilityFloor = 1e-12;

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row);

ProperScores proper_scores(const PredictionSet& ps);

/// All metrics in one pass. The Gram matrix (exact_dual) or feature map
/// (rff_primal) is built once and shared by CKCE and JKCE. In rff_primal mode
/// JKCE uses the feature-induced kernel so the whole report stays O(n).
MetricReport report(const PredictionSet& ps, const KernelConfig& kcfg, const EstimatorConfig& ecfg,
                    const EceConfig& ececfg = {});

}  // namespace calibre
