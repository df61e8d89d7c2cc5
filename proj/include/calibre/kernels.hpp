#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace calibre {

enum class KernelFamily { linear, gaussian, combined };

std::string_view to_string(KernelFamily family);
/// Accepts "linear", "gaussian", "combined". Throws ValidationError.
KernelFamily parse_kernel_family(std::string_view name);

/// Kernel bandwidth: a fixed positive value or the median-heuristic sentinel.
class Bandwidth {
 public:
  static Bandwidth fixed(double gamma);
  static Bandwidth median() { return Bandwidth(); }

  bool is_median() const { return median_; }
  /// Throws ValidationError for the median sentinel.
  double value() const;

 private:
  Bandwidth() = default;
  bool median_ = true;
  double value_ = 0.0;
};

/// Kernel on the probability simplex.
///   linear:   k(p, q) = p.q
///   gaussian: k(p, q) = exp(-|p - q|^2 / (2 gamma^2))
///   combined: k(p, q) = p.q + exp(-|p - q|^2 / (2 gamma^2))
struct KernelConfig {
  KernelFamily family = KernelFamily::combined;
  Bandwidth gamma = Bandwidth::median();

  bool needs_bandwidth() const { return family != KernelFamily::linear; }
};

/// Requires a resolved bandwidth for gaussian/combined (ValidationError otherwise).
double kernel_eval(const KernelConfig& cfg, std::span<const double> p, std::span<const double> q);

/// Kronecker kernel on labels.
inline double label_kernel(int y, int y_other) { return y == y_other ? 1.0 : 0.0; }

/// [L]_ij = 1{y_i = y_j}.
Eigen::MatrixXd label_gram(std::span<const int> labels);

/// Symmetric n x n kernel matrix over a set of simplex points.
struct GramMatrix {
  Eigen::MatrixXd entries;

  Eigen::Index size() const { return entries.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries(i, j); }
};

/// Gram matrix over the columns of `points` (m x n, one point per column).
/// Upper triangle is evaluated and mirrored, so the result is exactly symmetric.
GramMatrix gram(const KernelConfig& cfg, const Eigen::MatrixXd& points);

/// Median of the positive pairwise Euclidean distances between rows of
/// `rows` (n x m). When n exceeds `cap`, `cap` rows are drawn uniformly
/// without replacement using `seed`. Throws ValidationError when fewer than
/// two rows are given or no pair is at positive distance.
double median_heuristic(const Eigen::MatrixXd& rows, std::size_t cap = 1000, std::uint64_t seed = 0);

/// Copy of `cfg` with a median sentinel replaced by median_heuristic(rows).
KernelConfig resolve_bandwidth(const KernelConfig& cfg, const Eigen::MatrixXd& rows, std::size_t cap = 1000,
                               std::uint64_t seed = 0);

}  // namespace calibre
