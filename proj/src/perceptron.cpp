#include "kfnet/perceptron.hpp"

#include <string>

#include "kfnet/error.hpp"

namespace kfnet {

LayerWeights::LayerWeights(Eigen::Index inputs, Eigen::Index units)
    : hidden(Eigen::MatrixXd::Zero(units, inputs + 1)),
      output(Eigen::VectorXd::Zero(units + 1)) {}

Eigen::VectorXd LayerWeights::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < hidden.rows(); ++r)
    for (Eigen::Index c = 0; c < hidden.cols(); ++c) flat[k++] = hidden(r, c);
  flat.tail(output.size()) = output;
  return flat;
}

void LayerWeights::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) {
    throw DimensionError("flat weight vector has length " + std::to_string(flat.size()) +
                         ", expected " + std::to_string(size()));
  }
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < hidden.rows(); ++r)
    for (Eigen::Index c = 0; c < hidden.cols(); ++c) hidden(r, c) = flat[k++];
  output = flat.tail(output.size());
}

bool LayerWeights::all_finite() const { return hidden.allFinite() && output.allFinite(); }

ForwardCache forward_pass(const LayerWeights& w, std::span<const double> inputs) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  if (n != w.inputs()) {
    throw DimensionError("forward: got " + std::to_string(n) + " inputs, network expects " +
                         std::to_string(w.inputs()));
  }
  ForwardCache cache;
  cache.input.resize(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) cache.input[i] = inputs[static_cast<std::size_t>(i)];
  cache.input[n] = 1.0;
  cache.hidden_pre = w.hidden * cache.input;
  cache.hidden_out = cache.hidden_pre.array().tanh();
  const Eigen::Index units = w.units();
  cache.output = w.output.head(units).dot(cache.hidden_out) + w.output[units];
  return cache;
}

namespace {

void check_cache(const LayerWeights& w, const ForwardCache& cache) {
  if (cache.input.size() != w.inputs() + 1 || cache.hidden_out.size() != w.units()) {
    throw DimensionError("forward cache does not match network dimensions");
  }
}

}  // namespace

JacobianRow output_jacobian(const LayerWeights& w, const ForwardCache& cache) {
  check_cache(w, cache);
  const Eigen::Index units = w.units();
  const Eigen::Index cols = w.hidden.cols();
  JacobianRow row{Eigen::VectorXd(w.size())};
  // delta_out = 1, identity output activation
  const Eigen::VectorXd delta_hidden =
      w.output.head(units).array() * (1.0 - cache.hidden_out.array().square());
  for (Eigen::Index r = 0; r < units; ++r) {
    row.values.segment(r * cols, cols) = delta_hidden[r] * cache.input;
  }
  row.values.segment(units * cols, units) = cache.hidden_out;
  row.values[w.size() - 1] = 1.0;
  return row;
}

Eigen::VectorXd input_sensitivity(const LayerWeights& w, const ForwardCache& cache) {
  check_cache(w, cache);
  const Eigen::Index units = w.units();
  const Eigen::VectorXd delta_hidden =
      w.output.head(units).array() * (1.0 - cache.hidden_out.array().square());
  return w.hidden.leftCols(w.inputs()).transpose() * delta_hidden;
}

}  // namespace kfnet
