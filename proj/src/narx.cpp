#include "kfnet/narx.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "kfnet/error.hpp"

namespace kfnet {

void validate(const NarxConfig& config) {
  if (config.input_delay_order < 1) throw ParameterError("narx: input delay order must be >= 1");
  if (config.feedback_delay_order < 1) {
    throw ParameterError("narx: feedback delay order must be >= 1");
  }
  if (config.hidden_units < 1) throw ParameterError("narx: hidden units must be >= 1");
  if (config.bptt_depth < 1) throw ParameterError("narx: BPTT depth must be >= 1");
}

Eigen::Index weight_count(const NarxConfig& config) {
  const Eigen::Index units = config.hidden_units;
  return units * (config.input_delay_order + config.feedback_delay_order + 1) + units + 1;
}

namespace {

const NarxConfig& checked(const NarxConfig& config) {
  validate(config);
  return config;
}

}  // namespace

NarxNetwork::NarxNetwork(const NarxConfig& config)
    : config_(checked(config)),
      weights_(config.input_delay_order + config.feedback_delay_order, config.hidden_units) {}

NarxNetwork::NarxNetwork(const NarxConfig& config, LayerWeights weights)
    : config_(checked(config)), weights_(std::move(weights)) {
  if (weights_.inputs() != config_.input_delay_order + config_.feedback_delay_order ||
      weights_.units() != config_.hidden_units ||
      weights_.output.size() != config_.hidden_units + 1) {
    throw DimensionError("narx: layer shapes do not match the configuration");
  }
  if (!weights_.all_finite()) throw NumericalError("narx: non-finite weight");
}

NarxNetwork init_weights(const NarxConfig& config, std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw ParameterError("init_weights: scale must be positive");
  NarxNetwork zero(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::VectorXd flat(zero.n_weights());
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = dist(rng);
  return set_flat_weights(zero, flat);
}

Eigen::VectorXd flat_weights(const NarxNetwork& net) { return net.weights().flatten(); }

NarxNetwork set_flat_weights(const NarxNetwork& net, const Eigen::VectorXd& flat) {
  LayerWeights w = net.weights();
  w.assign(flat);
  return NarxNetwork(net.config(), std::move(w));
}

NarxHistory::NarxHistory(const NarxConfig& config)
    : input_order_(static_cast<std::size_t>(checked(config).input_delay_order)),
      feedback_order_(static_cast<std::size_t>(config.feedback_delay_order)),
      depth_(static_cast<std::size_t>(config.bptt_depth)) {}

NarxHistory NarxHistory::primed(const NarxConfig& config, std::span<const double> samples) {
  NarxHistory history(config);
  const std::size_t need = std::max(history.input_order_, history.feedback_order_);
  if (samples.size() < need) {
    throw DegenerateInputError("narx: priming needs " + std::to_string(need) + " samples, got " +
                               std::to_string(samples.size()));
  }
  for (double v : samples.last(history.input_order_)) history.push_sample(v);
  for (double v : samples.last(history.feedback_order_)) history.push_prediction(v);
  return history;
}

void NarxHistory::push_sample(double value) {
  samples_.push_back(value);
  if (samples_.size() > input_order_) samples_.pop_front();
}

void NarxHistory::push_prediction(double value) {
  predictions_.push_back(value);
  if (predictions_.size() > feedback_order_) predictions_.pop_front();
}

void NarxHistory::push_cache(ForwardCache cache) {
  caches_.push_front(std::move(cache));
  if (caches_.size() > depth_) caches_.pop_back();
}

bool NarxHistory::warm() const {
  return samples_.size() == input_order_ && predictions_.size() == feedback_order_;
}

std::vector<double> NarxHistory::input_vector() const {
  std::vector<double> x(samples_.begin(), samples_.end());
  x.insert(x.end(), predictions_.begin(), predictions_.end());
  return x;
}

NarxStep narx_forward(const NarxNetwork& net, NarxHistory history, double new_sample) {
  if (!history.warm()) throw DegenerateInputError("narx: history is cold (delay lines not full)");
  history.push_sample(new_sample);
  ForwardCache cache = forward_pass(net.weights(), history.input_vector());
  const double prediction = cache.output;
  history.push_prediction(prediction);
  history.push_cache(std::move(cache));
  return {prediction, std::move(history)};
}

std::vector<JacobianRow> bptt_copy_rows(const NarxNetwork& net, const NarxHistory& history) {
  const auto depth = static_cast<std::size_t>(net.config().bptt_depth);
  const auto& caches = history.caches();
  if (caches.size() < depth) {
    throw DegenerateInputError("narx: BPTT needs " + std::to_string(depth) +
                               " cached steps, history holds " + std::to_string(caches.size()));
  }
  const auto n_in = static_cast<std::size_t>(net.config().input_delay_order);
  const auto n_fb = static_cast<std::size_t>(net.config().feedback_delay_order);

  // delta[n]: d(y_hat of copy 0) / d(output of copy n) through the feedback path.
  std::vector<double> delta(depth, 0.0);
  delta[0] = 1.0;
  std::vector<JacobianRow> rows;
  rows.reserve(depth);
  for (std::size_t n = 0; n < depth; ++n) {
    JacobianRow row = output_jacobian(net.weights(), caches[n]);
    row.values *= delta[n];
    rows.push_back(std::move(row));
    if (delta[n] == 0.0 || n + 1 == depth) continue;
    const Eigen::VectorXd sens = input_sensitivity(net.weights(), caches[n]);
    // Feedback slot with lag j (0 = newest) holds the output of copy n+1+j.
    for (std::size_t j = 0; j < n_fb && n + 1 + j < depth; ++j) {
      const auto slot = static_cast<Eigen::Index>(n_in + n_fb - 1 - j);
      delta[n + 1 + j] += delta[n] * sens[slot];
    }
  }
  return rows;
}

JacobianRow average_rows(std::span<const JacobianRow> rows) {
  if (rows.empty()) throw DegenerateInputError("average_rows: no rows");
  JacobianRow mean{Eigen::VectorXd::Zero(rows.front().values.size())};
  for (const auto& row : rows) {
    if (row.values.size() != mean.values.size()) {
      throw DimensionError("average_rows: rows differ in length");
    }
    mean.values += row.values;
  }
  if (rows.size() > 1) mean.values /= static_cast<double>(rows.size());
  return mean;
}

JacobianRow bptt_jacobian(const NarxNetwork& net, const NarxHistory& history) {
  const auto rows = bptt_copy_rows(net, history);
  return average_rows(rows);
}

}  // namespace kfnet
