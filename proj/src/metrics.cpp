#include "calibre/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "calibre/error.hpp"

namespace calibre {
namespace {

double clamp_ckce(double value) {
  if (!std::isfinite(value)) throw NumericError("CKCE evaluated to a non-finite value");
  if (value < 0.0) {
    if (value >= -kCkceClampTolerance) return 0.0;
    throw NumericError("CKCE evaluated to a negative value; the regularized system is ill-conditioned");
  }
  return value;
}

bool all_rows_identical(const Eigen::MatrixXd& P) {
  for (Eigen::Index i = 1; i < P.rows(); ++i) {
    if (P.row(i) != P.row(0)) return false;
  }
  return true;
}

}  // namespace

Eigen::MatrixXd residuals(const PredictionSet& ps) {
  Eigen::MatrixXd R = ps.columns();
  for (std::size_t i = 0; i < ps.size(); ++i) R(ps.label(i), static_cast<Eigen::Index>(i)) -= 1.0;
  return R;
}

Eigen::MatrixXd discrepancy_matrix(const PredictionSet& ps) {
  const Eigen::MatrixXd R = residuals(ps);
  return R.transpose() * R;
}

ResolvedKernel resolve_kernel(const PredictionSet& ps, const KernelConfig& kcfg, std::uint64_t seed) {
  if (!kcfg.needs_bandwidth()) return {kcfg, "none"};
  if (!kcfg.gamma.is_median()) return {kcfg, "fixed"};
  KernelConfig out = kcfg;
  if (all_rows_identical(ps.probs())) {
    out.gamma = Bandwidth::fixed(1.0);
    return {out, "median-degenerate"};
  }
  out.gamma = Bandwidth::fixed(median_heuristic(ps.probs(), 1000, seed));
  return {out, "median"};
}

double ckce(const DualCmo& fit) {
  const Eigen::MatrixXd R = fit.mean_targets() - fit.label_targets();
  // Tr(W R^T R W K) = Tr(X^T K X) with X = W R^T.
  const Eigen::MatrixXd X = fit.solve(R.transpose());
  const Eigen::MatrixXd KX = fit.gram().entries * X;
  return clamp_ckce((KX.array() * X.array()).sum());
}

double ckce(const PrimalCmo& fit) {
  return clamp_ckce(fit.discrepancy_operator().squaredNorm());
}

double ckce(const PredictionSet& ps, const KernelConfig& kcfg, const EstimatorConfig& ecfg) {
  const KernelConfig k = resolve_kernel(ps, kcfg, ecfg.seed).config;
  const double lambda = ecfg.lambda.resolve(ps.size());
  if (ecfg.mode == EstimatorMode::rff_primal) {
    const double gamma = k.needs_bandwidth() ? k.gamma.value() : 1.0;
    const RffMap map = make_rff(ps.classes(), ecfg.rff_features, gamma, ecfg.seed, k.family);
    return ckce(fit_primal(ps, map, lambda));
  }
  return ckce(fit_dual(ps, gram(k, ps.columns()), lambda));
}

double jkce(const PredictionSet& ps, const GramMatrix& K) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  if (n < 2) throw ValidationError("JKCE needs at least two samples");
  if (K.size() != n) throw ValidationError("Gram matrix size does not match sample");
  const Eigen::MatrixXd R = residuals(ps);
  const Eigen::Index m = R.rows();
  double total = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    const double* rj = R.col(j).data();
    double col = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double* ri = R.col(i).data();
      double g = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) g += ri[k] * rj[k];
      col += K.entries(i, j) * g;
    }
    total += col;
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double jkce(const PredictionSet& ps, const KernelConfig& kcfg, std::uint64_t seed) {
  if (ps.size() < 2) throw ValidationError("JKCE needs at least two samples");
  const KernelConfig k = resolve_kernel(ps, kcfg, seed).config;
  return jkce(ps, gram(k, ps.columns()));
}

double jkce(const PredictionSet& ps, const RffMap& map) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  if (n < 2) throw ValidationError("JKCE needs at least two samples");
  const Eigen::MatrixXd R = residuals(ps);
  const Eigen::MatrixXd points = ps.columns();
  // sum_{i != j} (phi_i.phi_j)(r_i.r_j) = |sum_i phi_i r_i^T|_F^2 - sum_i |phi_i|^2 |r_i|^2
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(map.dimension(), R.rows());
  double diagonal = 0.0;
  constexpr Eigen::Index kBlock = 4096;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, n - start);
    const Eigen::MatrixXd F = map.design(points.middleCols(start, len));
    const auto Rb = R.middleCols(start, len);
    S.noalias() += F * Rb.transpose();
    diagonal += (F.colwise().squaredNorm().array() * Rb.colwise().squaredNorm().array()).sum();
  }
  return (S.squaredNorm() - diagonal) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

int default_ece_bins(int classes) {
  if (classes <= 2) return 15;
  if (classes == 3) return 10;
  return 5;
}

std::optional<double> ece(const PredictionSet& ps, const EceConfig& cfg) {
  const int m = ps.classes();
  if (m > kEceMaxClasses) return std::nullopt;
  const int bins = cfg.bins_per_dim.value_or(default_ece_bins(m));
  if (bins < 1) throw ValidationError("ECE bins per dimension must be at least 1");
  if (cfg.min_count < 0) throw ValidationError("ECE min_count must be non-negative");
  // Cell count bins^m must stay representable.
  if (m * std::log2(static_cast<double>(bins)) > 62.0) {
    throw ValidationError("ECE grid of " + std::to_string(bins) + "^" + std::to_string(m) + " cells overflows");
  }

  struct Cell {
    std::size_t count = 0;
    Eigen::VectorXd prob_sum;
    Eigen::VectorXd label_count;
  };
  // Cells are products of per-coordinate intervals over all m coordinates, so
  // the partition does not depend on how classes are ordered.
  std::map<std::vector<int>, Cell> cells;
  const Eigen::MatrixXd& P = ps.probs();
  std::vector<int> key(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (int k = 0; k < m; ++k) {
      const int b = static_cast<int>(std::floor(P(i, k) * bins));
      key[static_cast<std::size_t>(k)] = std::clamp(b, 0, bins - 1);
    }
    Cell& c = cells[key];
    if (c.count == 0) {
      c.prob_sum = Eigen::VectorXd::Zero(m);
      c.label_count = Eigen::VectorXd::Zero(m);
    }
    ++c.count;
    c.prob_sum += P.row(i).transpose();
    c.label_count(ps.label(static_cast<std::size_t>(i))) += 1.0;
  }

  const std::size_t keep_at = static_cast<std::size_t>(std::max(cfg.min_count, 1));
  std::size_t kept = 0;
  for (const auto& [k, c] : cells) {
    if (c.count >= keep_at) kept += c.count;
  }
  if (kept == 0) return std::nullopt;

  double total = 0.0;
  for (const auto& [k, c] : cells) {
    if (c.count < keep_at) continue;
    const double nb = static_cast<double>(c.count);
    const double l1 = (c.label_count / nb - c.prob_sum / nb).lpNorm<1>();
    total += (nb / static_cast<double>(kept)) * l1;
  }
  return total;
}

int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = static_cast<int>(j);
  }
  return best;
}

ReliabilityData reliability(const PredictionSet& ps, int bins) {
  if (bins < 1) throw ValidationError("reliability diagram needs at least one bin");
  const double lo = 1.0 / ps.classes();
  const double width = (1.0 - lo) / bins;
  ReliabilityData out;
  out.bins.resize(static_cast<std::size_t>(bins));
  std::vector<double> conf_sum(out.bins.size(), 0.0);
  std::vector<double> hits(out.bins.size(), 0.0);
  for (int b = 0; b < bins; ++b) {
    out.bins[static_cast<std::size_t>(b)].lo = lo + b * width;
    out.bins[static_cast<std::size_t>(b)].hi = b + 1 == bins ? 1.0 : lo + (b + 1) * width;
  }
  const Eigen::MatrixXd& P = ps.probs();
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const int pred = argmax(P.row(i));
    const double c = P(i, pred);
    const int b = std::clamp(static_cast<int>(std::floor((c - lo) / width)), 0, bins - 1);
    auto& bin = out.bins[static_cast<std::size_t>(b)];
    ++bin.count;
    conf_sum[static_cast<std::size_t>(b)] += c;
    if (pred == ps.label(static_cast<std::size_t>(i))) hits[static_cast<std::size_t>(b)] += 1.0;
  }
  for (std::size_t b = 0; b < out.bins.size(); ++b) {
    auto& bin = out.bins[b];
    if (bin.count == 0) continue;
    bin.mean_confidence = conf_sum[b] / static_cast<double>(bin.count);
    bin.accuracy = hits[b] / static_cast<double>(bin.count);
  }
  return out;
}

ProperScores proper_scores(const PredictionSet& ps) {
  const Eigen::MatrixXd& P = ps.probs();
  double correct = 0.0, log_loss = 0.0, brier = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const int y = ps.label(static_cast<std::size_t>(i));
    if (argmax(P.row(i)) == y) correct += 1.0;
    log_loss -= std::log(std::max(P(i, y), kProbabilityFloor));
    double sq = 0.0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      const double d = P(i, j) - (j == y ? 1.0 : 0.0);
      sq += d * d;
    }
    brier += sq;
  }
  const double n = static_cast<double>(P.rows());
  return {correct / n, log_loss / n, brier / n};
}

MetricReport report(const PredictionSet& ps, const KernelConfig& kcfg, const EstimatorConfig& ecfg,
                    const EceConfig& ececfg) {
  if (ps.size() < 2) throw ValidationError("a metric report needs at least two samples");
  const ResolvedKernel rk = resolve_kernel(ps, kcfg, ecfg.seed);
  const KernelConfig& k = rk.config;
  const double lambda = ecfg.lambda.resolve(ps.size());

  MetricReport r;
  if (ecfg.mode == EstimatorMode::rff_primal) {
    const double gamma = k.needs_bandwidth() ? k.gamma.value() : 1.0;
    const RffMap map = make_rff(ps.classes(), ecfg.rff_features, gamma, ecfg.seed, k.family);
    r.ckce = ckce(fit_primal(ps, map, lambda));
    r.jkce = jkce(ps, map);
    r.config.rff_features = ecfg.rff_features;
    r.config.jkce_kernel = "rff";
  } else {
    GramMatrix K = gram(k, ps.columns());
    r.jkce = jkce(ps, K);
    r.ckce = ckce(fit_dual(ps, std::move(K), lambda));
    r.config.jkce_kernel = "exact";
  }
  r.ece = ece(ps, ececfg);
  const ProperScores scores = proper_scores(ps);
  r.accuracy = scores.accuracy;
  r.cross_entropy = scores.cross_entropy;
  r.brier = scores.brier;

  auto& c = r.config;
  c.kernel = std::string(to_string(k.family));
  if (k.needs_bandwidth()) c.gamma = k.gamma.value();
  c.gamma_source = rk.gamma_source;
  c.lambda = lambda;
  c.lambda_source = ecfg.lambda.is_auto() ? "auto" : "fixed";
  c.mode = std::string(to_string(ecfg.mode));
  c.seed = ecfg.seed;
  c.ece_bins_per_dim = ececfg.bins_per_dim.value_or(default_ece_bins(ps.classes()));
  c.ece_min_count = ececfg.min_count;
  c.n = ps.size();
  c.m = static_cast<std::uint64_t>(ps.classes());
  return r;
}

}  // namespace calibre
