#include "kfnet/mlp.hpp"

#include <random>
#include <string>

#include "kfnet/error.hpp"

namespace kfnet {

void validate(const DmlpConfig& config) {
  if (config.input_delay_order < 1) throw ParameterError("dmlp: input delay order must be >= 1");
  if (config.hidden_units < 1) throw ParameterError("dmlp: hidden units must be >= 1");
}

Eigen::Index weight_count(const DmlpConfig& config) {
  const Eigen::Index units = config.hidden_units;
  return units * (config.input_delay_order + 1) + units + 1;
}

namespace {

const DmlpConfig& checked(const DmlpConfig& config) {
  validate(config);
  return config;
}

}  // namespace

DmlpNetwork::DmlpNetwork(const DmlpConfig& config)
    : config_(checked(config)), weights_(config.input_delay_order, config.hidden_units) {}

DmlpNetwork::DmlpNetwork(const DmlpConfig& config, LayerWeights weights)
    : config_(config), weights_(std::move(weights)) {
  validate(config_);
  if (weights_.inputs() != config_.input_delay_order || weights_.units() != config_.hidden_units ||
      weights_.output.size() != config_.hidden_units + 1) {
    throw DimensionError("dmlp: layer shapes do not match the configuration");
  }
  if (!weights_.all_finite()) throw NumericalError("dmlp: non-finite weight");
}

DmlpNetwork init_weights(const DmlpConfig& config, std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw ParameterError("init_weights: scale must be positive");
  DmlpNetwork zero(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::VectorXd flat(zero.n_weights());
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = dist(rng);
  return set_flat_weights(zero, flat);
}

ForwardCache forward(const DmlpNetwork& net, std::span<const double> window) {
  return forward_pass(net.weights(), window);
}

JacobianRow jacobian_bp(const DmlpNetwork& net, const ForwardCache& cache) {
  return output_jacobian(net.weights(), cache);
}

Eigen::VectorXd flat_weights(const DmlpNetwork& net) { return net.weights().flatten(); }

DmlpNetwork set_flat_weights(const DmlpNetwork& net, const Eigen::VectorXd& flat) {
  LayerWeights w = net.weights();
  w.assign(flat);
  return DmlpNetwork(net.config(), std::move(w));
}

}  // namespace kfnet
