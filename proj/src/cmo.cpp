#include "calibre/cmo.hpp"

#include <algorithm>
#include <cmath>

#include "calibre/error.hpp"

namespace calibre {
namespace {

constexpr Eigen::Index kPrimalBlock = 4096;

Eigen::LLT<Eigen::MatrixXd> factor_regularized(Eigen::MatrixXd system, double ridge) {
  if (!system.allFinite()) throw NumericError("kernel matrix contains non-finite entries");
  if (!(ridge > 0.0) || !std::isfinite(ridge)) throw NumericError("regularization must be positive");
  system.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw NumericError("Cholesky factorization failed: matrix is not positive definite");
  return llt;
}

}  // namespace

Regularization Regularization::fixed(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be a positive finite number");
  Regularization r;
  r.auto_ = false;
  r.value_ = lambda;
  return r;
}

double Regularization::resolve(std::size_t n) const {
  if (!auto_) return value_;
  if (n == 0) throw ValidationError("cannot resolve lambda for an empty sample");
  return std::pow(static_cast<double>(n), -0.25);
}

std::string_view to_string(EstimatorMode mode) {
  return mode == EstimatorMode::exact_dual ? "exact_dual" : "rff_primal";
}

EstimatorMode parse_estimator_mode(std::string_view name) {
  if (name == "exact_dual" || name == "exact" || name == "dual") return EstimatorMode::exact_dual;
  if (name == "rff_primal" || name == "rff" || name == "primal") return EstimatorMode::rff_primal;
  throw ValidationError("unknown estimator mode '" + std::string(name) + "'");
}

Eigen::MatrixXd label_features(const PredictionSet& ps) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(ps.classes(), n);
  for (Eigen::Index i = 0; i < n; ++i) Y(ps.label(static_cast<std::size_t>(i)), i) = 1.0;
  return Y;
}

DualCmo::DualCmo(const PredictionSet& ps, GramMatrix gram, double lambda)
    : gram_(std::move(gram)), label_targets_(label_features(ps)), mean_targets_(ps.columns()), lambda_(lambda) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  if (gram_.size() != n || gram_.entries.cols() != n) throw ValidationError("Gram matrix size does not match sample");
  factor_ = factor_regularized(gram_.entries, lambda * static_cast<double>(n));
}

Eigen::MatrixXd DualCmo::solve(const Eigen::MatrixXd& rhs) const { return factor_.solve(rhs); }

Eigen::MatrixXd DualCmo::weights() const {
  return factor_.solve(Eigen::MatrixXd::Identity(gram_.size(), gram_.size()));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> DualCmo::embed(const Eigen::VectorXd& kernel_column) const {
  const Eigen::VectorXd alpha = factor_.solve(kernel_column);
  return {label_targets_ * alpha, mean_targets_ * alpha};
}

DualCmo fit_dual(const PredictionSet& ps, const KernelConfig& kcfg, const EstimatorConfig& ecfg) {
  const KernelConfig resolved = resolve_bandwidth(kcfg, ps.probs(), 1000, ecfg.seed);
  return DualCmo(ps, gram(resolved, ps.columns()), ecfg.lambda.resolve(ps.size()));
}

DualCmo fit_dual(const PredictionSet& ps, GramMatrix gram, double lambda) {
  return DualCmo(ps, std::move(gram), lambda);
}

PrimalCmo fit_primal(const PredictionSet& ps, const RffMap& map, double lambda) {
  if (map.classes() != ps.classes()) throw ValidationError("feature map class count does not match predictions");
  const Eigen::Index n = static_cast<Eigen::Index>(ps.size());
  const Eigen::Index m = ps.classes();
  const Eigen::Index dim = map.dimension();
  const Eigen::MatrixXd points = ps.columns();

  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(dim, dim);
  // Row blocks accumulate Y1 F^T, Z F^T and (Z - Y1) F^T.
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(3 * m, dim);
  for (Eigen::Index start = 0; start < n; start += kPrimalBlock) {
    const Eigen::Index len = std::min(kPrimalBlock, n - start);
    const Eigen::MatrixXd block = points.middleCols(start, len);
    const Eigen::MatrixXd F = map.design(block);
    system.selfadjointView<Eigen::Lower>().rankUpdate(F);
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(3 * m, len);
    targets.middleRows(m, m) = block;
    targets.bottomRows(m) = block;
    for (Eigen::Index j = 0; j < len; ++j) {
      const int y = ps.label(static_cast<std::size_t>(start + j));
      targets(y, j) = 1.0;
      targets(2 * m + y, j) -= 1.0;
    }
    cross.noalias() += targets * F.transpose();
  }
  system.triangularView<Eigen::StrictlyUpper>() = system.transpose();
  const auto llt = factor_regularized(std::move(system), lambda * static_cast<double>(n));

  // A = cross * S^-1, i.e. A^T = S^-1 cross^T with S symmetric.
  const Eigen::MatrixXd ops = llt.solve(cross.transpose()).transpose();
  return PrimalCmo(ops.topRows(m), ops.middleRows(m, m), ops.bottomRows(m), lambda);
}

PrimalCmo fit_primal(const PredictionSet& ps, const RffMap& map, const EstimatorConfig& ecfg) {
  return fit_primal(ps, map, ecfg.lambda.resolve(ps.size()));
}

}  // namespace calibre
