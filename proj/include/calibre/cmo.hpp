#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "calibre/dataset.hpp"
#include "calibre/kernels.hpp"
#include "calibre/rff.hpp"

namespace calibre {

/// Ridge parameter lambda: fixed, or the schedule lambda_n = n^(-1/4).
/// The regularized systems use lambda * n on the diagonal.
class Regularization {
 public:
  static Regularization automatic() { return Regularization(); }
  static Regularization fixed(double lambda);

  bool is_auto() const { return auto_; }
  double resolve(std::size_t n) const;

 private:
  Regularization() = default;
  bool auto_ = true;
  double value_ = 0.0;
};

enum class EstimatorMode { exact_dual, rff_primal };

std::string_view to_string(EstimatorMode mode);
/// Accepts "exact_dual"/"exact"/"dual" and "rff_primal"/"rff"/"primal".
EstimatorMode parse_estimator_mode(std::string_view name);

struct EstimatorConfig {
  Regularization lambda = Regularization::automatic();
  EstimatorMode mode = EstimatorMode::exact_dual;
  int rff_features = 100;
  std::uint64_t seed = 0;
};

/// One-hot label features, m x n (column i is e_{y_i}).
Eigen::MatrixXd label_features(const PredictionSet& ps);

/// Dual (Gram-side) estimates of the two conditional mean operators
///   C_Y|Q = Y1 W Phi*,   C_Z|Q = Z W Phi*,   W = (K + lambda n I)^-1,
/// where the mean-embedding matrix Z holds the predictions themselves.
/// W is kept as a Cholesky factor; weights() materializes it.
class DualCmo {
 public:
  DualCmo(const PredictionSet& ps, GramMatrix gram, double lambda);

  double lambda() const { return lambda_; }
  std::size_t size() const { return static_cast<std::size_t>(gram_.size()); }
  const GramMatrix& gram() const { return gram_; }
  const Eigen::MatrixXd& label_targets() const { return label_targets_; }
  const Eigen::MatrixXd& mean_targets() const { return mean_targets_; }

  /// W * rhs via the factorization.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// Explicit W (n x n). O(n^3); for inspection and tests.
  Eigen::MatrixXd weights() const;

  /// Estimated embeddings at a query point given k(Q, q) as a length-n vector:
  /// first is C_Y|Q phi(q) (in R^m), second is C_Z|Q phi(q).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> embed(const Eigen::VectorXd& kernel_column) const;

 private:
  GramMatrix gram_;
  Eigen::MatrixXd label_targets_;
  Eigen::MatrixXd mean_targets_;
  double lambda_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Primal estimates with an explicit feature map F (dim x n):
///   A = T F^T (F F^T + lambda n I)^-1  for T = Y1, T = Z and T = Z - Y1.
/// The last one is A_Z - A_Y solved from the residuals directly, so it is
/// exactly zero when every residual is.
class PrimalCmo {
 public:
  PrimalCmo(Eigen::MatrixXd label_operator, Eigen::MatrixXd mean_operator, Eigen::MatrixXd discrepancy_operator,
            double lambda)
      : label_operator_(std::move(label_operator)),
        mean_operator_(std::move(mean_operator)),
        discrepancy_operator_(std::move(discrepancy_operator)),
        lambda_(lambda) {}

  /// m x dim.
  const Eigen::MatrixXd& label_operator() const { return label_operator_; }
  const Eigen::MatrixXd& mean_operator() const { return mean_operator_; }
  const Eigen::MatrixXd& discrepancy_operator() const { return discrepancy_operator_; }
  double lambda() const { return lambda_; }

 private:
  Eigen::MatrixXd label_operator_;
  Eigen::MatrixXd mean_operator_;
  Eigen::MatrixXd discrepancy_operator_;
  double lambda_;
};

/// Resolves a median bandwidth (seeded by ecfg.seed) and lambda, builds the
/// Gram matrix and factors it. Throws NumericError if the regularized Gram
/// matrix is not positive definite.
DualCmo fit_dual(const PredictionSet& ps, const KernelConfig& kcfg, const EstimatorConfig& ecfg);

/// Same, with a precomputed Gram matrix and an already resolved lambda.
DualCmo fit_dual(const PredictionSet& ps, GramMatrix gram, double lambda);

/// Streams the feature matrix in row blocks; only a dim x dim system is solved.
PrimalCmo fit_primal(const PredictionSet& ps, const RffMap& map, const EstimatorConfig& ecfg);
PrimalCmo fit_primal(const PredictionSet& ps, const RffMap& map, double lambda);

}  // namespace calibre
