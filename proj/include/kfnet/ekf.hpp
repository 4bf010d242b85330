#pragma once

#include <Eigen/Dense>

namespace kfnet {

/// Weight-estimate covariance P with measurement noise R = eta*I and
/// process noise Q = mu*I.
struct KalmanState {
  Eigen::MatrixXd P;
  double eta = 1e-3;
  double mu = 1e-8;
};

/// Stacked Jacobian rows (m x N_w) and the matching residuals t - y_hat.
/// m = 1 for the per-sample filter, m = H for the batch-over-horizon filter.
struct BatchObservation {
  Eigen::MatrixXd rows;
  Eigen::VectorXd residuals;

  Eigen::Index size() const { return rows.rows(); }
};

/// P = I.
KalmanState ekf_init(Eigen::Index n_weights, double eta, double mu);

/// H P H^T + eta*I (m x m).
Eigen::MatrixXd innovation_covariance(const KalmanState& state, const BatchObservation& obs);

/// K = P H^T (H P H^T + R)^-1, solved through a Cholesky factorization.
Eigen::MatrixXd kalman_gain(const KalmanState& state, const BatchObservation& obs);

/// One filter step:
///   K = P H^T (H P H^T + R)^-1
///   P <- P - K H P + Q, then P <- (P + P^T) / 2
///   w <- w + K E
/// Throws NumericalError if the innovation matrix is not positive definite
/// or the result is non-finite; `state` and `weights` are untouched then.
void ekf_update(KalmanState& state, const BatchObservation& obs, Eigen::VectorXd& weights);

/// Single-observation step written with vector operations only; the
/// reference that the batch path must reproduce for m = 1.
void ekf_update_scalar(KalmanState& state, const Eigen::VectorXd& row, double residual,
                       Eigen::VectorXd& weights);

/// max |P - P^T|.
double asymmetry(const Eigen::MatrixXd& m);

}  // namespace kfnet
