#include "kfnet/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kfnet/data.hpp"
#include "kfnet/ekf.hpp"
#include "kfnet/experiment.hpp"
#include "kfnet/fptt.hpp"
#include "kfnet/narx.hpp"
#include "kfnet/predictor.hpp"

namespace kfnet {

namespace {

constexpr double kFdStep = 1e-6;

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double fd_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  return ((analytic - numeric).array().abs() / (1.0 + numeric.array().abs())).maxCoeff();
}

/// Central differences of `f` with respect to every flat weight of `layers`.
template <class F>
Eigen::VectorXd numeric_gradient(const LayerWeights& layers, F&& f) {
  const Eigen::VectorXd w0 = layers.flatten();
  Eigen::VectorXd grad(w0.size());
  LayerWeights probe = layers;
  for (Eigen::Index i = 0; i < w0.size(); ++i) {
    Eigen::VectorXd w = w0;
    w[i] = w0[i] + kFdStep;
    probe.assign(w);
    const double up = f(probe);
    w[i] = w0[i] - kFdStep;
    probe.assign(w);
    const double down = f(probe);
    grad[i] = (up - down) / (2.0 * kFdStep);
  }
  return grad;
}

CheckResult dmlp_gradient_check(const SelftestHooks& hooks) {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const DmlpConfig cfg{1 + trial % 6, 1 + trial % 8};
    const auto net = init_weights(cfg, 1000 + trial, 1.0);
    const auto x = random_vector(rng, static_cast<std::size_t>(cfg.input_delay_order), 1.5);
    const auto row = hooks.jacobian(net, forward(net, x));
    const auto fd = numeric_gradient(net.weights(), [&](const LayerWeights& w) {
      return forward_pass(w, x).output;
    });
    worst = std::max(worst, fd_error(row.values, fd));
  }
  return {"dmlp jacobian vs finite differences", worst < 1e-5, worst, 1e-5};
}

CheckResult fptt_frozen_check(const SelftestHooks& hooks) {
  std::mt19937_64 rng(202);
  constexpr int kHorizon = 5;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const DmlpConfig cfg{2 + trial % 4, 2 + trial % 5};
    const auto net = init_weights(cfg, 2000 + trial, 0.8);
    const auto window = random_vector(rng, static_cast<std::size_t>(cfg.input_delay_order), 1.0);
    const auto copies = unfold_closed_loop(net, window, kHorizon);
    for (const auto& copy : copies) {
      const std::vector<double> frozen(copy.input.data(), copy.input.data() + copy.input.size() - 1);
      const auto fd = numeric_gradient(net.weights(), [&](const LayerWeights& w) {
        return forward_pass(w, frozen).output;
      });
      worst = std::max(worst, fd_error(hooks.jacobian(net, copy).values, fd));
    }
  }
  return {"fptt per-copy rows vs frozen-input finite differences", worst < 1e-5, worst, 1e-5};
}

CheckResult ekf_identity_check() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_gain = 0.0, worst_sym = 0.0;
  constexpr Eigen::Index kWeights = 12;
  KalmanState state = ekf_init(kWeights, 1e-3, 1e-8);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(kWeights);
  for (int step = 0; step < 300; ++step) {
    const Eigen::Index m = 1 + step % 6;
    BatchObservation obs{Eigen::MatrixXd(m, kWeights), Eigen::VectorXd(m)};
    for (Eigen::Index i = 0; i < obs.rows.size(); ++i) obs.rows.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < m; ++i) obs.residuals[i] = g(rng);
    const Eigen::MatrixXd k = kalman_gain(state, obs);
    const Eigen::MatrixXd lhs = k * innovation_covariance(state, obs);
    const Eigen::MatrixXd rhs = state.P * obs.rows.transpose();
    worst_gain = std::max(worst_gain, (lhs - rhs).cwiseAbs().maxCoeff());
    ekf_update(state, obs, w);
    worst_sym = std::max(worst_sym, asymmetry(state.P));
  }
  const double worst = std::max(worst_gain, worst_sym);
  return {"ekf gain identity and covariance symmetry", worst < 1e-9, worst, 1e-9};
}

CheckResult batch_scalar_reduction_check() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> g(0.0, 1.0);
  constexpr Eigen::Index kWeights = 9;
  KalmanState batch_state = ekf_init(kWeights, 1e-3, 1e-8);
  KalmanState scalar_state = batch_state;
  Eigen::VectorXd wb = Eigen::VectorXd::Zero(kWeights), ws = wb;
  double worst = 0.0;
  for (int step = 0; step < 200; ++step) {
    BatchObservation obs{Eigen::MatrixXd(1, kWeights), Eigen::VectorXd(1)};
    for (Eigen::Index i = 0; i < kWeights; ++i) obs.rows(0, i) = g(rng);
    obs.residuals[0] = g(rng);
    ekf_update(batch_state, obs, wb);
    ekf_update_scalar(scalar_state, obs.rows.row(0).transpose(), obs.residuals[0], ws);
    worst = std::max({worst, (wb - ws).cwiseAbs().maxCoeff(),
                      (batch_state.P - scalar_state.P).cwiseAbs().maxCoeff()});
    // Re-align so each step is compared from identical inputs.
    ws = wb;
    scalar_state = batch_state;
  }
  return {"batch ekf with one row equals scalar ekf", worst <= 1e-15, worst, 1e-15};
}

CheckResult fptt_h1_reduction_check() {
  const auto series = generate_mackey_glass({0.1, 0.2, 17, 120, 1.2, 200});
  const auto data = normalize(series, {0, series.size()});
  const DmlpConfig cfg{5, 4};
  DmlpNetwork bp = init_weights(cfg, 7, 0.1);
  DmlpNetwork fptt = bp;
  KalmanState kb = ekf_init(bp.n_weights(), 1e-3, 1e-8);
  KalmanState kf = kb;
  train_epoch_ekf_bp(bp, kb, data.view());
  train_epoch_bekf_fptt(fptt, kf, data.view(), 1);
  const double diff = (flat_weights(bp) - flat_weights(fptt)).cwiseAbs().maxCoeff();
  return {"bekf-fptt with H=1 equals ekf-bp over an epoch", diff <= 1e-12, diff, 1e-12};
}

CheckResult narx_checks() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  // h = 1: the dynamic Jacobian is the static one.
  {
    const NarxConfig cfg{3, 2, 4, 1};
    const auto net = init_weights(cfg, 11, 0.5);
    auto history = NarxHistory::primed(cfg, random_vector(rng, 3, 1.0));
    history = narx_forward(net, std::move(history), 0.3).history;
    const auto dynamic = bptt_jacobian(net, history);
    const auto fixed = output_jacobian(net.weights(), history.caches().front());
    worst = std::max(worst, (dynamic.values - fixed.values).cwiseAbs().maxCoeff());
  }
  // h > 1: h * mean row equals the derivative of the unrolled composition.
  for (int trial = 0; trial < 5; ++trial) {
    const NarxConfig cfg{2 + trial % 3, 1 + trial % 3, 3, 2 + trial % 3};
    const auto net = init_weights(cfg, 20 + trial, 0.6);
    const auto samples = random_vector(rng, 12, 1.0);
    const std::size_t prime = static_cast<std::size_t>(
        std::max(cfg.input_delay_order, cfg.feedback_delay_order));
    auto history = NarxHistory::primed(cfg, std::span(samples).first(prime));
    const std::size_t start = samples.size() - static_cast<std::size_t>(cfg.bptt_depth);
    for (std::size_t t = prime; t < start; ++t) {
      history = narx_forward(net, std::move(history), samples[t]).history;
    }
    const NarxHistory before = history;
    for (std::size_t t = start; t < samples.size(); ++t) {
      history = narx_forward(net, std::move(history), samples[t]).history;
    }
    const auto row = bptt_jacobian(net, history);
    const auto fd = numeric_gradient(net.weights(), [&](const LayerWeights& w) {
      const NarxNetwork probe(cfg, w);
      NarxHistory h = before;
      double y = 0.0;
      for (std::size_t t = start; t < samples.size(); ++t) {
        auto step = narx_forward(probe, std::move(h), samples[t]);
        h = std::move(step.history);
        y = step.prediction;
      }
      return y;
    });
    worst = std::max(worst, fd_error(row.values * cfg.bptt_depth, fd));
  }
  return {"narx bptt jacobian (h=1 static, h>1 unrolled finite differences)", worst < 1e-5,
          worst, 1e-5};
}

CheckResult metric_check() {
  std::mt19937_64 rng(606);
  const auto t = random_vector(rng, 64, 3.0);
  const auto p = random_vector(rng, 64, 3.0);
  double worst = nmse(t, t);
  const std::vector<double> flat(t.size(), mean(t));
  worst = std::max(worst, std::abs(nmse(flat, t) - 1.0));
  std::vector<double> pa(p.size()), ta(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    pa[i] = -2.5 * p[i] + 7.0;
    ta[i] = -2.5 * t[i] + 7.0;
  }
  const double base = nmse(p, t);
  worst = std::max(worst, std::abs(nmse(pa, ta) - base) / base);
  return {"nmse zero/one/affine-invariance", worst < 1e-12, worst, 1e-12};
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestHooks& hooks) {
  return {dmlp_gradient_check(hooks),      fptt_frozen_check(hooks),  ekf_identity_check(),
          batch_scalar_reduction_check(), fptt_h1_reduction_check(), narx_checks(),
          metric_check()};
}

}  // namespace kfnet
