#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace calibre::oracle {

Eigen::RowVectorXd random_simplex_point(Rng& rng, int m) {
  Eigen::RowVectorXd p(m);
  for (int j = 0; j < m; ++j) p(j) = -std::log(rng.uniform_open());
  return p / p.sum();
}

namespace {

int draw_categorical(Rng& rng, const Eigen::RowVectorXd& q) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    acc += q(j);
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(q.size() - 1);
}

}  // namespace

PredictionSet random_predictions(Rng& rng, std::size_t n, int m, bool calibrated) {
  Eigen::MatrixXd P(static_cast<Eigen::Index>(n), m);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    P.row(static_cast<Eigen::Index>(i)) = random_simplex_point(rng, m);
    labels[i] = calibrated ? draw_categorical(rng, P.row(static_cast<Eigen::Index>(i)))
                           : static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
  }
  return PredictionSet(std::move(labels), std::move(P));
}

PredictionSet resample_labels(const PredictionSet& ps, Rng& rng) {
  std::vector<int> labels(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) labels[i] = draw_categorical(rng, ps.probs().row(static_cast<Eigen::Index>(i)));
  return PredictionSet(std::move(labels), ps.probs());
}

double kernel(int family, const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q, double gamma) {
  const double lin = p.dot(q);
  const double gau = std::exp(-(p - q).squaredNorm() / (2.0 * gamma * gamma));
  if (family == 0) return lin;
  if (family == 1) return gau;
  return lin + gau;
}

Eigen::MatrixXd discrepancy(const PredictionSet& ps) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  const Eigen::MatrixXd& Q = ps.probs();
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const int yi = ps.label(static_cast<std::size_t>(i));
      const int yj = ps.label(static_cast<std::size_t>(j));
      G(i, j) = Q.row(i).dot(Q.row(j)) + (yi == yj ? 1.0 : 0.0) - Q(i, yj) - Q(j, yi);
    }
  }
  return G;
}

double ckce_trace(const PredictionSet& ps, const Eigen::MatrixXd& K, double lambda) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  const Eigen::MatrixXd reg = K + lambda * static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd W = reg.fullPivLu().inverse();
  return (W * discrepancy(ps) * W * K).trace();
}

void explicit_primal_operators(const PredictionSet& ps, const RffMap& map, double lambda, Eigen::MatrixXd& label_op,
                               Eigen::MatrixXd& mean_op) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  const int m = ps.classes();
  Eigen::MatrixXd F(map.dimension(), n);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(m, n);
  Eigen::MatrixXd Z(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd q = ps.probs().row(i);
    std::vector<double> buf(q.data(), q.data() + q.size());
    F.col(i) = map.featurize(buf);
    Y(ps.label(static_cast<std::size_t>(i)), i) = 1.0;
    Z.col(i) = q.transpose();
  }
  const Eigen::Index dim = F.rows();
  const Eigen::MatrixXd inv =
      (F * F.transpose() + lambda * static_cast<double>(n) * Eigen::MatrixXd::Identity(dim, dim)).fullPivLu().inverse();
  label_op = Y * F.transpose() * inv;
  mean_op = Z * F.transpose() * inv;
}

double ckce_explicit_primal(const PredictionSet& ps, const RffMap& map, double lambda) {
  Eigen::MatrixXd ay, az;
  explicit_primal_operators(ps, map, lambda, ay, az);
  return (az - ay).squaredNorm();
}

double jkce(const PredictionSet& ps, int family, double gamma) {
  const auto n = static_cast<Eigen::Index>(ps.size());
  const Eigen::MatrixXd G = discrepancy(ps);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      total += kernel(family, ps.probs().row(i), ps.probs().row(j), gamma) * G(i, j);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double median_distance(const Eigen::MatrixXd& rows) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j) {
      const double v = (rows.row(i) - rows.row(j)).norm();
      if (v > 0.0) d.push_back(v);
    }
  }
  std::sort(d.begin(), d.end());
  const std::size_t k = d.size();
  return k % 2 == 1 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
}

std::vector<double> truncnorm_rejection(double alpha, double sigma, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = alpha + sigma * rng.normal();
    if (x >= -1.0 && x <= 1.0) out.push_back(x);
  }
  return out;
}

}  // namespace calibre::oracle
