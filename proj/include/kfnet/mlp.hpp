#pragma once

#include <cstdint>
#include <span>

#include "kfnet/perceptron.hpp"

namespace kfnet {

/// Dynamic MLP: a tapped delay line of `input_delay_order` samples feeding
/// one tanh hidden layer and a linear output.
struct DmlpConfig {
  int input_delay_order = 5;
  int hidden_units = 5;

  bool operator==(const DmlpConfig&) const = default;
};

void validate(const DmlpConfig& config);

/// Number of weights including both bias sets: units*(N+1) + units + 1.
Eigen::Index weight_count(const DmlpConfig& config);

class DmlpNetwork {
 public:
  /// All-zero weights.
  explicit DmlpNetwork(const DmlpConfig& config);
  DmlpNetwork(const DmlpConfig& config, LayerWeights weights);

  const DmlpConfig& config() const { return config_; }
  const LayerWeights& weights() const { return weights_; }
  const Eigen::MatrixXd& w1() const { return weights_.hidden; }
  const Eigen::VectorXd& w2() const { return weights_.output; }
  Eigen::Index n_weights() const { return weights_.size(); }

  bool operator==(const DmlpNetwork&) const = default;

 private:
  DmlpConfig config_;
  LayerWeights weights_;
};

/// Every weight i.i.d. uniform on [-scale, scale] from a generator seeded
/// with `seed`.
DmlpNetwork init_weights(const DmlpConfig& config, std::uint64_t seed, double scale);

/// `window` holds the N most recent samples, oldest first.
ForwardCache forward(const DmlpNetwork& net, std::span<const double> window);

/// d(y_hat)/d(w) obtained by backpropagating a constant output delta of 1.
JacobianRow jacobian_bp(const DmlpNetwork& net, const ForwardCache& cache);

Eigen::VectorXd flat_weights(const DmlpNetwork& net);
DmlpNetwork set_flat_weights(const DmlpNetwork& net, const Eigen::VectorXd& flat);

}  // namespace kfnet
