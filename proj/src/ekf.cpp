#include "kfnet/ekf.hpp"

#include <cmath>
#include <string>

#include "kfnet/error.hpp"

namespace kfnet {

namespace {

void check_scales(double eta, double mu) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("ekf: eta must be positive");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ParameterError("ekf: mu must be non-negative");
}

void check_dims(const KalmanState& state, const BatchObservation& obs) {
  if (obs.rows.rows() < 1) throw DimensionError("ekf: observation has no rows");
  if (obs.rows.rows() != obs.residuals.size()) {
    throw DimensionError("ekf: " + std::to_string(obs.rows.rows()) + " Jacobian rows vs " +
                         std::to_string(obs.residuals.size()) + " residuals");
  }
  if (obs.rows.cols() != state.P.rows()) {
    throw DimensionError("ekf: Jacobian width " + std::to_string(obs.rows.cols()) +
                         " does not match N_w = " + std::to_string(state.P.rows()));
  }
}

void symmetrize(Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double avg = 0.5 * (m(r, c) + m(c, r));
      m(r, c) = avg;
      m(c, r) = avg;
    }
  }
}

}  // namespace

KalmanState ekf_init(Eigen::Index n_weights, double eta, double mu) {
  if (n_weights < 1) throw ParameterError("ekf: need at least one weight");
  check_scales(eta, mu);
  return {Eigen::MatrixXd::Identity(n_weights, n_weights), eta, mu};
}

Eigen::MatrixXd innovation_covariance(const KalmanState& state, const BatchObservation& obs) {
  check_dims(state, obs);
  Eigen::MatrixXd s = obs.rows * state.P * obs.rows.transpose();
  s.diagonal().array() += state.eta;
  return s;
}

Eigen::MatrixXd kalman_gain(const KalmanState& state, const BatchObservation& obs) {
  check_dims(state, obs);
  const Eigen::MatrixXd pht = state.P * obs.rows.transpose();
  Eigen::MatrixXd s = obs.rows * pht;
  s.diagonal().array() += state.eta;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ekf: innovation covariance is not positive definite");
  }
  return llt.solve(pht.transpose()).transpose();
}

void ekf_update(KalmanState& state, const BatchObservation& obs, Eigen::VectorXd& weights) {
  check_dims(state, obs);
  if (weights.size() != state.P.rows()) {
    throw DimensionError("ekf: weight vector length " + std::to_string(weights.size()) +
                         " does not match N_w = " + std::to_string(state.P.rows()));
  }
  check_scales(state.eta, state.mu);

  const Eigen::MatrixXd pht = state.P * obs.rows.transpose();
  Eigen::MatrixXd gain;
  if (obs.size() == 1) {
    const double s = obs.rows.row(0).dot(pht.col(0)) + state.eta;
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw NumericalError("ekf: innovation variance is not positive");
    }
    gain = pht / s;
  } else {
    Eigen::MatrixXd s = obs.rows * pht;
    s.diagonal().array() += state.eta;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("ekf: innovation covariance is not positive definite");
    }
    gain = llt.solve(pht.transpose()).transpose();
  }

  Eigen::VectorXd next_w = weights + gain * obs.residuals;
  // K H P = K (P H^T)^T since P is symmetric.
  Eigen::MatrixXd next_p = state.P;
  next_p.noalias() -= gain * pht.transpose();
  next_p.diagonal().array() += state.mu;
  symmetrize(next_p);
  if (!next_w.allFinite() || !next_p.allFinite()) {
    throw NumericalError("ekf: update produced non-finite weights or covariance");
  }
  weights = std::move(next_w);
  state.P = std::move(next_p);
}

void ekf_update_scalar(KalmanState& state, const Eigen::VectorXd& row, double residual,
                       Eigen::VectorXd& weights) {
  if (row.size() != state.P.rows() || weights.size() != state.P.rows()) {
    throw DimensionError("ekf: row or weight length does not match N_w");
  }
  check_scales(state.eta, state.mu);
  const Eigen::VectorXd ph = state.P * row;
  const double s = row.dot(ph) + state.eta;
  if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("ekf: innovation variance is not positive");
  const Eigen::VectorXd gain = ph / s;

  Eigen::VectorXd next_w = weights + gain * residual;
  Eigen::MatrixXd next_p = state.P;
  next_p.noalias() -= gain * ph.transpose();
  next_p.diagonal().array() += state.mu;
  symmetrize(next_p);
  if (!next_w.allFinite() || !next_p.allFinite()) {
    throw NumericalError("ekf: update produced non-finite weights or covariance");
  }
  weights = std::move(next_w);
  state.P = std::move(next_p);
}

double asymmetry(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("asymmetry: matrix is not square");
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace kfnet
