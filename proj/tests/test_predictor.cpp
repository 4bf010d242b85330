#include <doctest.h>

#include <random>

#include "kfnet/error.hpp"
#include "kfnet/predictor.hpp"
#include "oracles.hpp"

using namespace kfnet;

namespace {

DmlpNetwork constant_net(int n, int units, double beta) {
  const DmlpConfig cfg{n, units};
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(weight_count(cfg));
  flat[flat.size() - 1] = beta;
  return set_flat_weights(DmlpNetwork(cfg), flat);
}

}  // namespace

TEST_CASE("closed loop with H = 1 is one forward pass") {
  const auto net = init_weights(DmlpConfig{3, 4}, 2, 0.5);
  const std::vector<double> w{0.1, 0.4, -0.2};
  const auto run = predict_closed_loop(net, w, 1, 17);
  REQUIRE(run.predictions.size() == 1);
  CHECK(run.predictions[0] == forward(net, w).output);
  CHECK(run.anchor_index == 17);
  CHECK_FALSE(run.diverged);
}

TEST_CASE("constant-output network predicts its bias at every step") {
  const auto run = predict_closed_loop(constant_net(4, 3, -0.3), std::vector<double>{1, 2, 3, 4}, 9);
  CHECK(run.predictions == std::vector<double>(9, -0.3));
}

TEST_CASE("closed loop equals manual composition with window shifting") {
  std::mt19937_64 rng(3);
  const auto net = init_weights(DmlpConfig{4, 5}, 8, 0.9);
  auto window = oracle::uniform(rng, 4, 1.0);
  const auto run = predict_closed_loop(net, window, 5);
  for (int h = 0; h < 5; ++h) {
    const double y = forward(net, window).output;
    CHECK(run.predictions[static_cast<std::size_t>(h)] == y);
    window.erase(window.begin());
    window.push_back(y);
  }
  CHECK_THROWS_AS(predict_closed_loop(net, std::vector<double>{1, 2}, 3), DimensionError);
  CHECK_THROWS_AS(predict_closed_loop(net, std::vector<double>{1, 2, 3, 4}, 0), ParameterError);
}

TEST_CASE("a perfect model scores zero at every horizon") {
  // y(k+1) = c for a constant-output net; a series that is constant after a
  // prefix with a varying part keeps target variance nonzero only if anchors
  // reach it, so use an affine AR(1) model instead: identity on the last input.
  const DmlpConfig cfg{1, 1};
  // y = v tanh(w x) with tiny w approximates v*w*x; exact zero error needs a
  // series generated by the network itself.
  const auto net = init_weights(cfg, 4, 0.9);
  std::vector<double> v{0.8};
  for (int t = 0; t < 60; ++t) v.push_back(forward(net, std::vector<double>{v.back()}).output);
  const TimeSeries s("self", v);
  const auto anchors = anchor_range(0, 40);
  const auto scores = horizon_nmse(net, s, anchors, 6);
  for (double e : scores.nmse) CHECK(e == 0.0);
  CHECK(scores.n_anchors == 41);
  CHECK(scores.n_diverged == 0);
}

TEST_CASE("horizon 1 pooled nmse equals the single-step nmse") {
  const auto s = normalize(generate_mackey_glass({}), {0, 500});
  const auto net = init_weights(DmlpConfig{5, 4}, 12, 0.3);
  const auto anchors = anchor_range(499, 580);
  const auto scores = horizon_nmse(net, s, anchors, 3);
  std::vector<double> p, t;
  for (std::size_t k : anchors) {
    const auto& n = *s.normalization();
    p.push_back(n.invert(forward(net, s.view().subspan(k - 4, 5)).output));
    t.push_back(n.invert(s[k + 1]));
  }
  CHECK(std::abs(scores.nmse[0] - nmse(p, t)) <= 1e-12 * nmse(p, t));
  CHECK(horizon_nmse(net, s, anchors, 3).nmse == scores.nmse);
}

TEST_CASE("horizon_nmse degenerate inputs") {
  const auto s = generate_mackey_glass({});
  const auto net = init_weights(DmlpConfig{5, 4}, 12, 0.3);
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(horizon_nmse(net, s, none, 3), DegenerateInputError);
  const std::vector<std::size_t> one{100};
  CHECK_THROWS_AS(horizon_nmse(net, s, one, 1), DegenerateInputError);
  const std::vector<std::size_t> late{598};
  CHECK_THROWS_AS(horizon_nmse(net, s, late, 3), DimensionError);
  const std::vector<std::size_t> early{2};
  CHECK_THROWS_AS(horizon_nmse(net, s, early, 3), DimensionError);
}

TEST_CASE("diverged runs are excluded and counted") {
  const auto s = generate_mackey_glass({});
  std::vector<PredictionRun> runs;
  for (std::size_t k = 10; k < 20; ++k) {
    PredictionRun r{k, 2, {s[k + 1] + 0.01, s[k + 2] - 0.02}, false};
    runs.push_back(r);
  }
  runs.push_back({30, 2, {0.5}, true});
  const auto scores = pool_horizon_nmse(runs, s, 2);
  CHECK(scores.n_anchors == 11);
  CHECK(scores.n_diverged == 1);
  CHECK(scores.nmse[0] > 0.0);
}

TEST_CASE("narx closed loop runs") {
  const auto s = normalize(generate_mackey_glass({}), {0, 500});
  const NarxConfig cfg{3, 2, 4, 2};
  const auto net = init_weights(cfg, 6, 0.4);
  const auto anchors = anchor_range(10, 40);
  const auto runs = closed_loop_runs(net, s.view(), anchors, 4);
  REQUIRE(runs.size() == anchors.size());

  // Re-derive anchor 25 by hand.
  auto h = NarxHistory::primed(cfg, s.view().first(3));
  double y = 0.0;
  for (std::size_t t = 3; t <= 25; ++t) {
    auto step = narx_forward(net, std::move(h), s[t]);
    h = std::move(step.history);
    y = step.prediction;
  }
  std::vector<double> expected{y};
  for (int i = 1; i < 4; ++i) {
    auto step = narx_forward(net, std::move(h), y);
    h = std::move(step.history);
    y = step.prediction;
    expected.push_back(y);
  }
  CHECK(runs[15].anchor_index == 25);
  CHECK(runs[15].predictions == expected);

  const std::vector<std::size_t> unsorted{20, 10};
  CHECK_THROWS_AS(closed_loop_runs(net, s.view(), unsorted, 2), ParameterError);
  const std::vector<std::size_t> too_early{2};
  CHECK_THROWS_AS(closed_loop_runs(net, s.view(), too_early, 2), DimensionError);
}
