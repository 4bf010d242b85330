#include <doctest.h>

#include <random>

#include "kfnet/ekf.hpp"
#include "kfnet/error.hpp"

using namespace kfnet;

namespace {

BatchObservation random_obs(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  BatchObservation obs{Eigen::MatrixXd(m, n), Eigen::VectorXd(m)};
  for (Eigen::Index i = 0; i < obs.rows.size(); ++i) obs.rows.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < m; ++i) obs.residuals[i] = g(rng);
  return obs;
}

/// Dense textbook formulas with an explicit inverse.
struct DenseStep {
  Eigen::MatrixXd gain, cov;
  Eigen::VectorXd weights;
};

DenseStep dense_oracle(const Eigen::MatrixXd& p, const BatchObservation& obs, const Eigen::VectorXd& w,
                       double eta, double mu) {
  const Eigen::Index m = obs.rows.rows();
  const Eigen::MatrixXd h = obs.rows;
  const Eigen::MatrixXd s = h * p * h.transpose() + eta * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd k = p * h.transpose() * s.inverse();
  Eigen::MatrixXd next = p - k * h * p + mu * Eigen::MatrixXd::Identity(p.rows(), p.cols());
  next = (0.5 * (next + next.transpose())).eval();
  return {k, next, w + k * obs.residuals};
}

}  // namespace

TEST_CASE("ekf_init") {
  const auto s = ekf_init(3, 1e-3, 1e-8);
  CHECK(s.P == Eigen::MatrixXd::Identity(3, 3));
  CHECK(s.eta == 1e-3);
  CHECK(s.mu == 1e-8);
  CHECK_THROWS_AS(ekf_init(3, 0.0, 1e-8), ParameterError);
  CHECK_THROWS_AS(ekf_init(3, -1.0, 1e-8), ParameterError);
  CHECK_THROWS_AS(ekf_init(3, 1e-3, -1.0), ParameterError);
  CHECK_THROWS_AS(ekf_init(0, 1e-3, 0.0), ParameterError);
}

TEST_CASE("innovation covariance") {
  auto s = ekf_init(4, 0.01, 0.0);
  BatchObservation zero{Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)};
  CHECK(innovation_covariance(s, zero).isApprox(0.01 * Eigen::MatrixXd::Identity(2, 2)));
  BatchObservation unit{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1)};
  unit.rows(0, 0) = 1.0;
  CHECK(innovation_covariance(s, unit)(0, 0) == doctest::Approx(1.01));

  std::mt19937_64 rng(1);
  s.P = Eigen::MatrixXd::Random(4, 4);
  s.P = s.P * s.P.transpose() + Eigen::MatrixXd::Identity(4, 4);
  const auto obs = random_obs(rng, 3, 4);
  const Eigen::MatrixXd ref = obs.rows * s.P * obs.rows.transpose() + 0.01 * Eigen::MatrixXd::Identity(3, 3);
  CHECK((innovation_covariance(s, obs) - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(innovation_covariance(s, random_obs(rng, 2, 5)), DimensionError);
}

TEST_CASE("zero jacobian leaves the weights and adds Q") {
  auto s = ekf_init(3, 1e-3, 1e-6);
  Eigen::VectorXd w(3);
  w << 0.1, 0.2, 0.3;
  const Eigen::VectorXd w0 = w;
  BatchObservation obs{Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Constant(1, 5.0)};
  CHECK(kalman_gain(s, obs).isZero(0.0));
  ekf_update(s, obs, w);
  CHECK(w == w0);
  CHECK(s.P.isApprox((1.0 + 1e-6) * Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("scalar update by hand") {
  // P = 1, H = [1], E = [0.5], eta = 1e-3: K = 1/(1+eta), w += 0.5 K, P = 1 - K + mu
  auto s = ekf_init(1, 1e-3, 1e-8);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 0.2);
  BatchObservation obs{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, 0.5)};
  CHECK(kalman_gain(s, obs)(0, 0) == doctest::Approx(0.9990009990009991).epsilon(1e-15));
  ekf_update(s, obs, w);
  CHECK(w[0] == doctest::Approx(0.6995004995004996).epsilon(1e-15));
  CHECK(s.P(0, 0) == doctest::Approx(0.000999010999000854).epsilon(1e-12));
}

TEST_CASE("batch update matches the dense oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 5 + trial % 4, m = 1 + trial % 5;
    auto s = ekf_init(n, 1e-2, 1e-6);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (int warm = 0; warm < 3; ++warm) ekf_update(s, random_obs(rng, 2, n), w);
    const auto obs = random_obs(rng, m, n);
    const auto ref = dense_oracle(s.P, obs, w, s.eta, s.mu);
    CHECK((kalman_gain(s, obs) - ref.gain).cwiseAbs().maxCoeff() < 1e-10);
    ekf_update(s, obs, w);
    CHECK((w - ref.weights).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.P - ref.cov).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("two identical rows differ from one row") {
  auto one = ekf_init(3, 1e-2, 0.0);
  auto two = one;
  Eigen::VectorXd w1 = Eigen::VectorXd::Zero(3), w2 = w1;
  Eigen::RowVector3d r(0.5, -1.0, 0.25);
  BatchObservation single{r, Eigen::VectorXd::Constant(1, 0.3)};
  BatchObservation doubled{Eigen::MatrixXd(2, 3), Eigen::VectorXd::Constant(2, 0.3)};
  doubled.rows << r, r;
  const auto ref = dense_oracle(two.P, doubled, w2, two.eta, two.mu);
  ekf_update(one, single, w1);
  ekf_update(two, doubled, w2);
  CHECK((w2 - ref.weights).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((w1 - w2).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("one-row batch equals the scalar path") {
  std::mt19937_64 rng(4);
  auto a = ekf_init(11, 1e-3, 1e-8);
  auto b = a;
  Eigen::VectorXd wa = Eigen::VectorXd::Zero(11), wb = wa;
  for (int step = 0; step < 500; ++step) {
    const auto obs = random_obs(rng, 1, 11);
    ekf_update(a, obs, wa);
    ekf_update_scalar(b, obs.rows.row(0).transpose(), obs.residuals[0], wb);
    REQUIRE((wa - wb).cwiseAbs().maxCoeff() <= 1e-15);
    REQUIRE((a.P - b.P).cwiseAbs().maxCoeff() <= 1e-15);
    wb = wa;
    b = a;
  }
}

TEST_CASE("gain identity and symmetry hold over many updates") {
  std::mt19937_64 rng(5);
  auto s = ekf_init(15, 1e-3, 1e-8);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(15);
  double worst = 0.0;
  for (int step = 0; step < 10000; ++step) {
    const auto obs = random_obs(rng, 1 + step % 4, 15);
    if (step % 50 == 0) {
      const Eigen::MatrixXd k = kalman_gain(s, obs);
      worst = std::max(worst, (k * innovation_covariance(s, obs) - s.P * obs.rows.transpose()).cwiseAbs().maxCoeff());
    }
    ekf_update(s, obs, w);
    REQUIRE(asymmetry(s.P) < 1e-9);
    REQUIRE(s.P.diagonal().allFinite());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("trace of P does not grow without process noise") {
  std::mt19937_64 rng(6);
  auto s = ekf_init(6, 1e-3, 0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(6);
  const auto obs = random_obs(rng, 2, 6);
  double trace = s.P.trace();
  for (int i = 0; i < 50; ++i) {
    ekf_update(s, obs, w);
    CHECK(s.P.trace() <= trace + 1e-12);
    trace = s.P.trace();
  }
}

TEST_CASE("one update shrinks the residual of a linear model") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    auto s = ekf_init(4, 1e-2, 1e-8);
    Eigen::VectorXd w = Eigen::VectorXd::Random(4);
    const Eigen::VectorXd x = Eigen::VectorXd::Random(4);
    const double target = 1.7;
    const double before = target - x.dot(w);
    BatchObservation obs{x.transpose(), Eigen::VectorXd::Constant(1, before)};
    ekf_update(s, obs, w);
    CHECK(std::abs(target - x.dot(w)) < std::abs(before));
  }
}

TEST_CASE("update errors") {
  auto s = ekf_init(3, 1e-3, 0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  BatchObservation bad{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(ekf_update(s, bad, w), DimensionError);
  BatchObservation ok{Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1)};
  Eigen::VectorXd short_w = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(ekf_update(s, ok, short_w), DimensionError);
  s.eta = 0.0;
  CHECK_THROWS_AS(ekf_update(s, ok, w), ParameterError);
}
