#include "calibre/rff.hpp"

#include <cmath>

#include "calibre/error.hpp"
#include "calibre/random.hpp"

namespace calibre {

RffMap::RffMap(int classes, int features, double gamma, std::uint64_t seed, KernelFamily family)
    : classes_(classes), features_(features), gamma_(gamma), seed_(seed), family_(family) {
  if (classes < 1) throw ValidationError("feature map needs at least one coordinate");
  if (features < 1) throw ValidationError("number of Fourier features must be at least 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("feature map bandwidth must be positive");
  if (has_fourier()) {
    Rng rng(seed);
    freqs_.resize(features, classes);
    for (int i = 0; i < features; ++i) {
      for (int k = 0; k < classes; ++k) freqs_(i, k) = rng.normal() / gamma;
    }
  }
}

Eigen::Index RffMap::dimension() const {
  return (has_linear() ? classes_ : 0) + (has_fourier() ? 2 * Eigen::Index{features_} : 0);
}

Eigen::VectorXd RffMap::featurize(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != classes_) throw ValidationError("point dimension does not match feature map");
  Eigen::Map<const Eigen::MatrixXd> col(p.data(), classes_, 1);
  return design(col);
}

Eigen::MatrixXd RffMap::design(const Eigen::MatrixXd& points) const {
  if (points.rows() != classes_) throw ValidationError("point dimension does not match feature map");
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd F(dimension(), n);
  Eigen::Index offset = 0;
  if (has_linear()) {
    F.topRows(classes_) = points;
    offset = classes_;
  }
  if (has_fourier()) {
    const Eigen::MatrixXd proj = freqs_ * points;  // D x n
    const double scale = 1.0 / std::sqrt(static_cast<double>(features_));
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < features_; ++i) {
        const double t = proj(i, j);
        F(offset + 2 * i, j) = scale * std::cos(t);
        F(offset + 2 * i + 1, j) = scale * std::sin(t);
      }
    }
  }
  return F;
}

RffMap make_rff(int classes, int features, double gamma, std::uint64_t seed, KernelFamily family) {
  return RffMap(classes, features, gamma, seed, family);
}

GramMatrix rff_gram(const RffMap& map, const Eigen::MatrixXd& points) {
  const Eigen::MatrixXd F = map.design(points);
  GramMatrix g{Eigen::MatrixXd(F.cols(), F.cols())};
  g.entries.setZero();
  g.entries.selfadjointView<Eigen::Lower>().rankUpdate(F.transpose());
  g.entries.triangularView<Eigen::StrictlyUpper>() = g.entries.transpose();
  return g;
}

}  // namespace calibre
