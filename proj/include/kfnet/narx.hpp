#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "kfnet/perceptron.hpp"

namespace kfnet {

/// NARX network: a delay line over true samples (order N) and one over the
/// network's own fed-back predictions (order L), truncated BPTT depth h.
struct NarxConfig {
  int input_delay_order = 5;
  int feedback_delay_order = 5;
  int hidden_units = 5;
  int bptt_depth = 5;

  bool operator==(const NarxConfig&) const = default;
};

void validate(const NarxConfig& config);

/// units*(N+L+1) + units + 1.
Eigen::Index weight_count(const NarxConfig& config);

/// Network input is [true line (oldest first); feedback line (oldest first); 1].
class NarxNetwork {
 public:
  explicit NarxNetwork(const NarxConfig& config);
  NarxNetwork(const NarxConfig& config, LayerWeights weights);

  const NarxConfig& config() const { return config_; }
  const LayerWeights& weights() const { return weights_; }
  const Eigen::MatrixXd& w1() const { return weights_.hidden; }
  const Eigen::VectorXd& w2() const { return weights_.output; }
  Eigen::Index n_weights() const { return weights_.size(); }

  bool operator==(const NarxNetwork&) const = default;

 private:
  NarxConfig config_;
  LayerWeights weights_;
};

NarxNetwork init_weights(const NarxConfig& config, std::uint64_t seed, double scale);
Eigen::VectorXd flat_weights(const NarxNetwork& net);
NarxNetwork set_flat_weights(const NarxNetwork& net, const Eigen::VectorXd& flat);

/// Bounded delay lines plus the forward caches of the most recent steps,
/// newest cache first.
class NarxHistory {
 public:
  explicit NarxHistory(const NarxConfig& config);

  /// Fills the true line with the last N of `samples` and the feedback line
  /// with the last L of them as stand-ins for predictions not yet made.
  /// Needs at least max(N, L) samples, oldest first.
  static NarxHistory primed(const NarxConfig& config, std::span<const double> samples);

  void push_sample(double value);
  void push_prediction(double value);
  void push_cache(ForwardCache cache);

  /// Both delay lines are full.
  bool warm() const;

  const std::deque<double>& samples() const { return samples_; }
  const std::deque<double>& predictions() const { return predictions_; }
  const std::deque<ForwardCache>& caches() const { return caches_; }

  /// Current network input without the bias slot.
  std::vector<double> input_vector() const;

 private:
  std::size_t input_order_;
  std::size_t feedback_order_;
  std::size_t depth_;
  std::deque<double> samples_;
  std::deque<double> predictions_;
  std::deque<ForwardCache> caches_;
};

struct NarxStep {
  double prediction;
  NarxHistory history;
};

/// Shifts `new_sample` into the true line, evaluates the network, then
/// shifts the prediction into the feedback line and records the cache.
NarxStep narx_forward(const NarxNetwork& net, NarxHistory history, double new_sample);

/// Per-copy rows of the unfolded network, newest copy first. Row n is the
/// static Jacobian of copy n scaled by the output delta that reaches copy n
/// through the feedback connections (delta of copy 0 is 1).
std::vector<JacobianRow> bptt_copy_rows(const NarxNetwork& net, const NarxHistory& history);

/// Arithmetic mean of the rows.
JacobianRow average_rows(std::span<const JacobianRow> rows);

/// Truncated-BPTT dynamic Jacobian: the mean of `bptt_copy_rows` over the
/// last h unfolded steps.
JacobianRow bptt_jacobian(const NarxNetwork& net, const NarxHistory& history);

}  // namespace kfnet
