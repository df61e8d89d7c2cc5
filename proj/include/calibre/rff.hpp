#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "calibre/kernels.hpp"

namespace calibre {

/// Frozen random Fourier feature map for the kernels on the simplex.
///
/// For the combined kernel the feature vector of p is
///   [p, cos(w_1.p)/sqrt(D), sin(w_1.p)/sqrt(D), ..., cos(w_D.p)/sqrt(D), sin(w_D.p)/sqrt(D)]
/// with w_i ~ N(0, gamma^-2 I), so phi(p).phi(q) is an unbiased estimate of
/// p.q + exp(-|p - q|^2 / (2 gamma^2)). The linear block is copied exactly.
/// A gaussian-only map drops the leading p block; a linear-only map has no
/// Fourier block and is exact.
class RffMap {
 public:
  RffMap(int classes, int features, double gamma, std::uint64_t seed,
         KernelFamily family = KernelFamily::combined);

  int classes() const { return classes_; }
  int features() const { return features_; }
  double gamma() const { return gamma_; }
  std::uint64_t seed() const { return seed_; }
  KernelFamily family() const { return family_; }

  /// D x m; row i is w_i.
  const Eigen::MatrixXd& frequencies() const { return freqs_; }

  /// Length of the feature vector: m + 2D for combined.
  Eigen::Index dimension() const;

  Eigen::VectorXd featurize(std::span<const double> p) const;

  /// Feature matrix for the columns of `points` (m x n); result is dimension() x n.
  Eigen::MatrixXd design(const Eigen::MatrixXd& points) const;

 private:
  bool has_linear() const { return family_ != KernelFamily::gaussian; }
  bool has_fourier() const { return family_ != KernelFamily::linear; }

  int classes_;
  int features_;
  double gamma_;
  std::uint64_t seed_;
  KernelFamily family_;
  Eigen::MatrixXd freqs_;
};

/// Deterministic in (m, D, gamma, seed). Throws ValidationError for D < 1 or gamma <= 0.
RffMap make_rff(int classes, int features, double gamma, std::uint64_t seed,
                KernelFamily family = KernelFamily::combined);

/// Gram matrix of the feature-induced kernel phi(p).phi(q) over the columns of `points`.
GramMatrix rff_gram(const RffMap& map, const Eigen::MatrixXd& points);

}  // namespace calibre
