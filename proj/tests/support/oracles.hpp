#pragma once

// Reference implementations used only by the tests. They follow the defining
// formulas literally (explicit inverses, elementwise sums) and share no
// solver code with the library paths they check.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "calibre/dataset.hpp"
#include "calibre/random.hpp"
#include "calibre/rff.hpp"

namespace calibre::oracle {

/// Dirichlet(1, ..., 1) draw.
Eigen::RowVectorXd random_simplex_point(Rng& rng, int m);

/// Random predictions with labels drawn from the predictions themselves
/// (calibrated) or uniformly (miscalibrated).
PredictionSet random_predictions(Rng& rng, std::size_t n, int m, bool calibrated);

/// Labels resampled as y_i ~ q_i.
PredictionSet resample_labels(const PredictionSet& ps, Rng& rng);

/// k(p, q) by formula; family 0 linear, 1 gaussian, 2 combined.
double kernel(int family, const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q, double gamma);

/// G_ij = q_i.q_j + 1{y_i = y_j} - q_i[y_j] - q_j[y_i], elementwise.
Eigen::MatrixXd discrepancy(const PredictionSet& ps);

/// Tr(W G W K) with W = (K + lambda n I)^-1 from an LU inverse.
double ckce_trace(const PredictionSet& ps, const Eigen::MatrixXd& K, double lambda);

/// |A_Z - A_Y|_F^2 with A = T F^T (F F^T + lambda n I)^-1 built explicitly
/// from the feature vectors of `map`.
double ckce_explicit_primal(const PredictionSet& ps, const RffMap& map, double lambda);

/// Explicit operators for the primal form, for tests that inspect them.
void explicit_primal_operators(const PredictionSet& ps, const RffMap& map, double lambda, Eigen::MatrixXd& label_op,
                               Eigen::MatrixXd& mean_op);

/// Double-loop unbiased JKCE with the formula kernel.
double jkce(const PredictionSet& ps, int family, double gamma);

/// Median over all positive pairwise distances (no subsampling).
double median_distance(const Eigen::MatrixXd& rows);

/// Draws from N(alpha, sigma^2) restricted to [-1, 1] by rejection.
std::vector<double> truncnorm_rejection(double alpha, double sigma, std::size_t n, std::uint64_t seed);

}  // namespace calibre::oracle
