#include <doctest.h>

#include <random>

#include "kfnet/data.hpp"
#include "kfnet/error.hpp"
#include "kfnet/experiment.hpp"
#include "kfnet/fptt.hpp"
#include "kfnet/predictor.hpp"
#include "oracles.hpp"

using namespace kfnet;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("H = 1 batch is the single-step pair") {
  const auto net = init_weights(DmlpConfig{4, 3}, 3, 0.5);
  const std::vector<double> window{0.2, -0.1, 0.4, 0.3}, target{0.25};
  const auto batch = fptt_unfold(net, window, target, 12);
  const auto cache = forward(net, window);
  CHECK(batch.horizon() == 1);
  CHECK(batch.anchor == 12);
  CHECK(Eigen::VectorXd(batch.observation.rows.row(0).transpose()) == jacobian_bp(net, cache).values);
  CHECK(batch.observation.residuals[0] == 0.25 - cache.output);
}

TEST_CASE("constant-output network rows and residuals") {
  const DmlpConfig cfg{3, 4};
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(weight_count(cfg));
  flat[flat.size() - 1] = 0.6;
  const auto net = set_flat_weights(DmlpNetwork(cfg), flat);
  const std::vector<double> window{1, 2, 3}, targets{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto batch = fptt_unfold(net, window, targets);
  REQUIRE(batch.observation.rows.rows() == 5);
  REQUIRE(batch.observation.rows.cols() == net.n_weights());
  const Eigen::Index out0 = 4 * 4;
  for (Eigen::Index h = 0; h < 5; ++h) {
    CHECK(batch.observation.rows(h, net.n_weights() - 1) == 1.0);
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(batch.observation.rows(h, out0 + j) == 0.0);
    CHECK(batch.observation.residuals[h] == doctest::Approx(targets[static_cast<std::size_t>(h)] - 0.6));
  }
}

TEST_CASE("per-copy rows match frozen-input finite differences") {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 4), units = 2 + static_cast<std::size_t>(trial % 5);
    const auto net = init_weights(DmlpConfig{static_cast<int>(n), static_cast<int>(units)}, 900 + trial, 0.8);
    const auto window = oracle::uniform(rng, n, 1.0);
    const auto targets = oracle::uniform(rng, 5, 1.0);
    const auto batch = fptt_unfold(net, window, targets);

    // Forward trajectory with the unperturbed weights fixes every copy's input.
    auto w = window;
    for (int h = 0; h < 5; ++h) {
      const auto frozen = w;
      const auto fd = oracle::gradient(
          [&](const std::vector<double>& flat) { return oracle::two_layer(flat, frozen, units); },
          to_std(flat_weights(net)));
      worst = std::max(worst, oracle::rel_error(Eigen::VectorXd(batch.observation.rows.row(h).transpose()), fd));
      const double y = oracle::two_layer(to_std(flat_weights(net)), w, units);
      w.erase(w.begin());
      w.push_back(y);
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("unfold predictions equal predict_closed_loop") {
  const auto net = init_weights(DmlpConfig{5, 6}, 31, 0.7);
  const std::vector<double> window{0.1, 0.3, -0.2, 0.5, 0.0};
  const std::vector<double> targets(7, 0.0);
  const auto batch = fptt_unfold(net, window, targets);
  const auto run = predict_closed_loop(net, window, 7);
  for (std::size_t h = 0; h < 7; ++h) CHECK(-batch.observation.residuals[static_cast<Eigen::Index>(h)] == run.predictions[h]);
}

TEST_CASE("zero residuals leave the weights and still update P") {
  const auto net0 = init_weights(DmlpConfig{3, 2}, 5, 0.5);
  const std::vector<double> window{0.1, 0.2, 0.3};
  const auto run = predict_closed_loop(net0, window, 4);
  DmlpNetwork net = net0;
  auto kalman = ekf_init(net.n_weights(), 1e-3, 1e-8);
  train_sample_bekf_fptt(net, kalman, window, run.predictions);
  CHECK(net == net0);
  CHECK_FALSE(kalman.P.isApprox(Eigen::MatrixXd::Identity(net.n_weights(), net.n_weights())));
}

TEST_CASE("H = 1 epoch reproduces ekf-bp exactly") {
  const auto data = normalize(generate_mackey_glass({}), {0, 500});
  const auto train = data.view().first(500);
  DmlpNetwork bp = init_weights(DmlpConfig{5, 6}, 99, 0.1), fptt = bp;
  auto kb = ekf_init(bp.n_weights(), 1e-3, 1e-8), kf = kb;
  train_epoch_ekf_bp(bp, kb, train);
  train_epoch_bekf_fptt(fptt, kf, train, 1);
  CHECK((flat_weights(bp) - flat_weights(fptt)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((kb.P - kf.P).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("epoch anchor count and errors") {
  const auto net0 = init_weights(DmlpConfig{3, 2}, 1, 0.1);
  DmlpNetwork net = net0;
  auto k = ekf_init(net.n_weights(), 1e-3, 0.0);
  const std::vector<double> tiny{0.1, 0.2, 0.3, 0.4};
  CHECK_THROWS_AS(train_epoch_bekf_fptt(net, k, tiny, 2), DegenerateInputError);
  const std::vector<double> window{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(fptt_unfold(net, window, std::vector<double>{}), DegenerateInputError);
  CHECK_THROWS_AS(fptt_unfold(net, std::vector<double>{0.1}, std::vector<double>{1.0}), DimensionError);

  // Exactly one anchor: len - N - H + 1 = 5 - 3 - 2 + 1.
  const std::vector<double> five{0.1, 0.2, 0.3, 0.4, 0.5};
  train_epoch_bekf_fptt(net, k, five, 2);
  DmlpNetwork manual = net0;
  auto km = ekf_init(manual.n_weights(), 1e-3, 0.0);
  train_sample_bekf_fptt(manual, km, std::span(five).first(3), std::span(five).subspan(3, 2));
  CHECK(manual == net);
}
