#pragma once

#include <cstddef>
#include <span>

#include "kfnet/ekf.hpp"
#include "kfnet/mlp.hpp"

namespace kfnet {

/// Batch observation for one anchor: row h-1 holds d(y_hat(k+h))/dw of the
/// h-th forward copy and residual t(k+h) - y_hat(k+h), for h = 1..H.
struct FpttBatch {
  BatchObservation observation;
  std::size_t anchor = 0;

  int horizon() const { return static_cast<int>(observation.size()); }
};

/// Unfolds the network forward through time in closed loop over
/// `future_targets.size()` steps. Each copy is backpropagated on its own:
/// fed-back predictions in its input window are data, not functions of the
/// weights, so no derivative crosses from one copy into another.
FpttBatch fptt_unfold(const DmlpNetwork& net, std::span<const double> window,
                      std::span<const double> future_targets, std::size_t anchor = 0);

/// One batch-EKF update driven by the FPTT batch of a single anchor.
void train_sample_bekf_fptt(DmlpNetwork& net, KalmanState& kalman, std::span<const double> window,
                            std::span<const double> future_targets);

/// Anchors k = N-1 .. size-1-H in order, one batch update each; that is
/// size - N - H + 1 updates. Throws DegenerateInputError if there are none.
void train_epoch_bekf_fptt(DmlpNetwork& net, KalmanState& kalman, std::span<const double> train,
                           int horizon);

}  // namespace kfnet
