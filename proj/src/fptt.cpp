#include "kfnet/fptt.hpp"

#include <string>

#include "kfnet/error.hpp"
#include "kfnet/predictor.hpp"

namespace kfnet {

FpttBatch fptt_unfold(const DmlpNetwork& net, std::span<const double> window,
                      std::span<const double> future_targets, std::size_t anchor) {
  if (future_targets.empty()) throw DegenerateInputError("fptt: no future targets");
  const int horizon = static_cast<int>(future_targets.size());
  const auto copies = unfold_closed_loop(net, window, horizon);

  FpttBatch batch;
  batch.anchor = anchor;
  batch.observation.rows.resize(horizon, net.n_weights());
  batch.observation.residuals.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    const auto& copy = copies[static_cast<std::size_t>(h)];
    batch.observation.rows.row(h) = jacobian_bp(net, copy).values.transpose();
    batch.observation.residuals[h] = future_targets[static_cast<std::size_t>(h)] - copy.output;
  }
  return batch;
}

void train_sample_bekf_fptt(DmlpNetwork& net, KalmanState& kalman, std::span<const double> window,
                            std::span<const double> future_targets) {
  const auto batch = fptt_unfold(net, window, future_targets);
  Eigen::VectorXd w = flat_weights(net);
  ekf_update(kalman, batch.observation, w);
  net = set_flat_weights(net, w);
}

void train_epoch_bekf_fptt(DmlpNetwork& net, KalmanState& kalman, std::span<const double> train,
                           int horizon) {
  if (horizon < 1) throw ParameterError("fptt: horizon must be >= 1");
  const auto n = static_cast<std::size_t>(net.config().input_delay_order);
  const auto hz = static_cast<std::size_t>(horizon);
  if (train.size() < n + hz) {
    throw DegenerateInputError("fptt: training split of " + std::to_string(train.size()) +
                               " samples has no anchor for N = " + std::to_string(n) +
                               ", H = " + std::to_string(hz));
  }
  for (std::size_t k = n - 1; k + hz < train.size(); ++k) {
    train_sample_bekf_fptt(net, kalman, train.subspan(k + 1 - n, n), train.subspan(k + 1, hz));
  }
}

}  // namespace kfnet
