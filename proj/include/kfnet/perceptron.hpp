#pragma once

#include <Eigen/Dense>
#include <span>

namespace kfnet {

/// Intermediates of one forward pass through a single-hidden-layer
/// perceptron. `input` carries a trailing bias slot fixed at 1.
struct ForwardCache {
  Eigen::VectorXd input;
  Eigen::VectorXd hidden_pre;
  Eigen::VectorXd hidden_out;
  double output = 0.0;
};

/// d(output)/d(weight) for every weight, in flat-view order.
struct JacobianRow {
  Eigen::VectorXd values;
};

/// One tanh hidden layer and a linear scalar output, both with biases.
///   hidden: units x (inputs + 1), last column is the bias
///   output: units + 1, last entry is the bias
/// Flat order is `hidden` row-major followed by `output`.
struct LayerWeights {
  Eigen::MatrixXd hidden;
  Eigen::VectorXd output;

  LayerWeights() = default;
  LayerWeights(Eigen::Index inputs, Eigen::Index units);

  Eigen::Index inputs() const { return hidden.cols() - 1; }
  Eigen::Index units() const { return hidden.rows(); }
  Eigen::Index size() const { return hidden.size() + output.size(); }

  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool all_finite() const;

  bool operator==(const LayerWeights& other) const {
    return hidden == other.hidden && output == other.output;
  }
};

ForwardCache forward_pass(const LayerWeights& w, std::span<const double> inputs);

/// Backpropagates a unit output delta; returns d(output)/d(weights).
JacobianRow output_jacobian(const LayerWeights& w, const ForwardCache& cache);

/// d(output)/d(input_i) for every non-bias input.
Eigen::VectorXd input_sensitivity(const LayerWeights& w, const ForwardCache& cache);

}  // namespace kfnet
