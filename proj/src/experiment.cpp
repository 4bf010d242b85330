#include "kfnet/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

#include "kfnet/error.hpp"
#include "kfnet/fptt.hpp"
#include "kfnet/predictor.hpp"

namespace kfnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_narx(Method m) { return m == Method::kNarxEkfBptt; }

std::size_t narx_prime_length(const NarxConfig& c) {
  return static_cast<std::size_t>(std::max(c.input_delay_order, c.feedback_delay_order));
}

/// First anchor usable by the network: the DMLP needs a full window, the
/// NARX needs its priming samples plus one step.
std::size_t first_anchor(const ExperimentConfig& c) {
  const auto dmlp_first = static_cast<std::size_t>(c.input_delay_order - 1);
  if (!is_narx(c.method)) return dmlp_first;
  const auto prime = static_cast<std::size_t>(std::max(c.input_delay_order, c.feedback_delay_order));
  return std::max(dmlp_first, prime);
}

double selection_score(const Network& net, const TimeSeries& series,
                       std::span<const std::size_t> anchors, int horizon) {
  try {
    const auto scores = std::visit(
        [&](const auto& n) { return horizon_nmse(n, series, anchors, horizon); }, net);
    const double s = scores.nmse.back();
    return std::isfinite(s) ? s : kInf;
  } catch (const NumericalError&) {
    return kInf;
  }
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kDmlpEkfBp:
      return "dmlp-ekf-bp";
    case Method::kDmlpBekfFptt:
      return "dmlp-bekf-fptt";
    case Method::kNarxEkfBptt:
      return "narx-ekf-bptt";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw ParameterError("unknown method '" + std::string(name) +
                       "'; valid methods: dmlp-ekf-bp, dmlp-bekf-fptt, narx-ekf-bptt");
}

std::vector<Method> all_methods() {
  return {Method::kDmlpEkfBp, Method::kDmlpBekfFptt, Method::kNarxEkfBptt};
}

void validate(const ExperimentConfig& c, std::size_t series_length) {
  if (c.ensemble_size < 1) throw ParameterError("ensemble size must be >= 1");
  if (c.epochs < 1) throw ParameterError("epochs must be >= 1");
  if (c.horizon < 1) throw ParameterError("horizon must be >= 1");
  if (c.input_delay_order < 1) throw ParameterError("input delay order must be >= 1");
  if (is_narx(c.method)) {
    if (c.feedback_delay_order < 1) throw ParameterError("feedback delay order must be >= 1");
    if (c.bptt_depth < 1) throw ParameterError("BPTT depth must be >= 1");
  }
  if (c.hidden_min < 1 || c.hidden_max < c.hidden_min) {
    throw ParameterError("hidden range must satisfy 1 <= min <= max");
  }
  if (!(c.eta > 0.0)) throw ParameterError("eta must be positive");
  if (!(c.mu >= 0.0)) throw ParameterError("mu must be non-negative");
  if (!(c.init_scale > 0.0)) throw ParameterError("init scale must be positive");
  if (c.jobs < 1) throw ParameterError("jobs must be >= 1");
  if (c.n_train < 1 || c.n_test < 1) throw ParameterError("train and test sizes must be positive");
  if (c.n_train + c.n_test > series_length) {
    throw ParameterError("split " + std::to_string(c.n_train) + "/" + std::to_string(c.n_test) +
                         " exceeds series length " + std::to_string(series_length));
  }
  const auto hz = static_cast<std::size_t>(c.horizon);
  if (first_anchor(c) + hz >= c.n_train) {
    throw ParameterError("training split too short for the delay orders and horizon");
  }
  if (hz > c.n_test) throw ParameterError("horizon exceeds the test split");
}

int member_hidden_units(const ExperimentConfig& c, int member_index) {
  const int range = c.hidden_max - c.hidden_min + 1;
  return c.hidden_min + member_index % range;
}

std::uint64_t member_seed(const ExperimentConfig& c, int member_index) {
  return c.seed + static_cast<std::uint64_t>(member_index);
}

void train_epoch_ekf_bp(DmlpNetwork& net, KalmanState& kalman, std::span<const double> train) {
  const auto n = static_cast<std::size_t>(net.config().input_delay_order);
  if (train.size() <= n) {
    throw DegenerateInputError("ekf-bp: training split of " + std::to_string(train.size()) +
                               " samples is not longer than N = " + std::to_string(n));
  }
  Eigen::VectorXd w = flat_weights(net);
  BatchObservation obs{Eigen::MatrixXd(1, net.n_weights()), Eigen::VectorXd(1)};
  for (std::size_t k = n - 1; k + 1 < train.size(); ++k) {
    const auto cache = forward(net, train.subspan(k + 1 - n, n));
    obs.rows.row(0) = jacobian_bp(net, cache).values.transpose();
    obs.residuals[0] = train[k + 1] - cache.output;
    ekf_update(kalman, obs, w);
    net = set_flat_weights(net, w);
  }
}

std::size_t narx_warmup_steps(const NarxConfig& c) {
  return static_cast<std::size_t>(
      std::max({c.input_delay_order, c.feedback_delay_order, c.bptt_depth}));
}

void train_epoch_narx(NarxNetwork& net, KalmanState& kalman, std::span<const double> train) {
  const auto& cfg = net.config();
  const std::size_t prime = narx_prime_length(cfg);
  const std::size_t warmup = narx_warmup_steps(cfg);
  if (train.size() < prime + warmup + 2) {
    throw DegenerateInputError("narx: training split too short for priming and warm-up");
  }
  NarxHistory history = NarxHistory::primed(cfg, train.first(prime));
  std::size_t t = prime;
  for (; t < prime + warmup; ++t) {
    history = narx_forward(net, std::move(history), train[t]).history;
  }
  Eigen::VectorXd w = flat_weights(net);
  BatchObservation obs{Eigen::MatrixXd(1, net.n_weights()), Eigen::VectorXd(1)};
  for (; t + 1 < train.size(); ++t) {
    auto step = narx_forward(net, std::move(history), train[t]);
    history = std::move(step.history);
    obs.rows.row(0) = bptt_jacobian(net, history).values.transpose();
    obs.residuals[0] = train[t + 1] - step.prediction;
    ekf_update(kalman, obs, w);
    net = set_flat_weights(net, w);
  }
}

MemberOutcome train_member(const ExperimentConfig& c, const TimeSeries& series, int member_index) {
  validate(c, series.size());
  MemberOutcome outcome;
  outcome.member_index = member_index;
  outcome.member_seed = member_seed(c, member_index);
  outcome.hidden_units = member_hidden_units(c, member_index);

  const TimeSeries raw = series.slice(0, c.n_train + c.n_test);
  const TimeSeries data = normalize(raw, {0, c.n_train});
  const auto train = data.view().first(c.n_train);
  const auto hz = static_cast<std::size_t>(c.horizon);
  const auto train_anchors = anchor_range(first_anchor(c), c.n_train - 1 - hz);
  const auto test_anchors = anchor_range(c.n_train - 1, c.n_train + c.n_test - 1 - hz);

  Network net = is_narx(c.method)
                    ? Network(init_weights(NarxConfig{c.input_delay_order, c.feedback_delay_order,
                                                      outcome.hidden_units, c.bptt_depth},
                                           outcome.member_seed, c.init_scale))
                    : Network(init_weights(DmlpConfig{c.input_delay_order, outcome.hidden_units},
                                           outcome.member_seed, c.init_scale));
  const Eigen::Index n_weights = std::visit([](const auto& n) { return n.n_weights(); }, net);
  KalmanState kalman = ekf_init(n_weights, c.eta, c.mu);

  TrainedModel model{net, *data.normalization(), 0, kInf, {}, {}, {}};
  try {
    for (int epoch = 1; epoch <= c.epochs; ++epoch) {
      std::visit(Overloaded{
                     [&](DmlpNetwork& n) {
                       if (c.method == Method::kDmlpBekfFptt) {
                         train_epoch_bekf_fptt(n, kalman, train, c.horizon);
                       } else {
                         train_epoch_ekf_bp(n, kalman, train);
                       }
                     },
                     [&](NarxNetwork& n) { train_epoch_narx(n, kalman, train); },
                 },
                 net);
      const double score = selection_score(net, data, train_anchors, c.horizon);
      model.epoch_log.push_back({epoch, score});
      if (score < model.selection_score) {
        model.selection_score = score;
        model.best_epoch = epoch;
        model.network = net;
      }
    }
  } catch (const NumericalError& e) {
    outcome.failure = std::string("training diverged: ") + e.what();
    return outcome;
  }
  if (model.best_epoch == 0) {
    outcome.failure = "no epoch produced a finite selection score";
    return outcome;
  }

  try {
    if (c.eval == EvalMode::kPooledAnchors) {
      const auto scores = std::visit(
          [&](const auto& n) { return horizon_nmse(n, data, test_anchors, c.horizon); },
          model.network);
      model.test_scores = scores.nmse;
      for (int h = 1; h <= c.horizon; ++h) model.test_horizons.push_back(h);
    } else {
      const std::array<std::size_t, 1> anchor{c.n_train - 1};
      const auto runs = std::visit(
          [&](const auto& n) { return closed_loop_runs(n, data.view(), anchor, c.horizon); },
          model.network);
      if (runs.front().diverged) throw NumericalError("test trajectory diverged");
      std::vector<double> preds;
      for (double p : runs.front().predictions) preds.push_back(model.normalization.invert(p));
      model.test_scores = {nmse(preds, raw.view().subspan(c.n_train, hz))};
      model.test_horizons = {c.horizon};
    }
  } catch (const NumericalError& e) {
    outcome.failure = std::string("test evaluation diverged: ") + e.what();
    return outcome;
  }
  outcome.model = std::move(model);
  return outcome;
}

BenchmarkResult run_benchmark(const ExperimentConfig& c, const TimeSeries& series) {
  validate(c, series.size());
  BenchmarkResult result;
  result.config = c;
  result.members.resize(static_cast<std::size_t>(c.ensemble_size));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < c.ensemble_size; i = next++) {
      result.members[static_cast<std::size_t>(i)] = train_member(c, series, i);
    }
  };
  const int n_threads = std::min(c.jobs, c.ensemble_size);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::vector<const TrainedModel*> ok;
  for (const auto& m : result.members) {
    if (m.model) {
      ok.push_back(&*m.model);
    } else {
      ++result.n_failed;
    }
  }
  if (ok.empty()) throw NumericalError("every ensemble member failed to train");

  result.horizons = ok.front()->test_horizons;
  const std::size_t nh = result.horizons.size();
  result.mean_nmse.assign(nh, 0.0);
  result.best_nmse.assign(nh, kInf);
  for (const auto* m : ok) {
    for (std::size_t i = 0; i < nh; ++i) {
      result.mean_nmse[i] += m->test_scores[i];
      result.best_nmse[i] = std::min(result.best_nmse[i], m->test_scores[i]);
    }
  }
  for (double& v : result.mean_nmse) v /= static_cast<double>(ok.size());
  return result;
}

namespace {

std::size_t horizon_index(const BenchmarkResult& r, int h) {
  const auto it = std::find(r.horizons.begin(), r.horizons.end(), h);
  if (it == r.horizons.end()) {
    throw ParameterError("horizon " + std::to_string(h) + " was not scored");
  }
  return static_cast<std::size_t>(it - r.horizons.begin());
}

}  // namespace

double mean_at(const BenchmarkResult& r, int h) { return r.mean_nmse[horizon_index(r, h)]; }
double best_at(const BenchmarkResult& r, int h) { return r.best_nmse[horizon_index(r, h)]; }

void write_results_csv(std::ostream& out, std::span<const BenchmarkResult> results) {
  out << "method,member_seed,hidden_units,best_epoch,h,nmse\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : results) {
    for (const auto& m : r.members) {
      if (!m.model) continue;
      for (std::size_t i = 0; i < m.model->test_horizons.size(); ++i) {
        out << to_string(r.config.method) << ',' << m.member_seed << ',' << m.hidden_units << ','
            << m.model->best_epoch << ',' << m.model->test_horizons[i] << ','
            << m.model->test_scores[i] << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, std::span<const BenchmarkResult> results) {
  out << "method,h,mean_nmse,best_nmse,n_failed\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
      out << to_string(r.config.method) << ',' << r.horizons[i] << ',' << r.mean_nmse[i] << ','
          << r.best_nmse[i] << ',' << r.n_failed << '\n';
    }
  }
}

void write_training_log_csv(std::ostream& out, const TrainedModel& model) {
  out << "epoch,train_ms_nmse,selected\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& rec : model.epoch_log) {
    out << rec.epoch << ',' << rec.train_ms_nmse << ',' << (rec.epoch == model.best_epoch ? 1 : 0)
        << '\n';
  }
}

}  // namespace kfnet
