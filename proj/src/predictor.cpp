#include "kfnet/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kfnet/error.hpp"

namespace kfnet {

namespace {

void check_horizon(int horizon) {
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
}

void check_anchor(std::size_t anchor, std::size_t min_anchor, int horizon, std::size_t size) {
  if (anchor < min_anchor || anchor + static_cast<std::size_t>(horizon) >= size) {
    throw DimensionError("anchor " + std::to_string(anchor) + " out of range [" +
                         std::to_string(min_anchor) + ", " +
                         std::to_string(size - 1 - std::min<std::size_t>(size - 1, horizon)) +
                         "] for horizon " + std::to_string(horizon));
  }
}

}  // namespace

std::vector<ForwardCache> unfold_closed_loop(const DmlpNetwork& net,
                                             std::span<const double> seed_window, int horizon) {
  check_horizon(horizon);
  const auto n = static_cast<std::size_t>(net.config().input_delay_order);
  if (seed_window.size() != n) {
    throw DimensionError("seed window has " + std::to_string(seed_window.size()) +
                         " samples, network expects " + std::to_string(n));
  }
  std::vector<double> window(seed_window.begin(), seed_window.end());
  std::vector<ForwardCache> copies;
  copies.reserve(static_cast<std::size_t>(horizon));
  for (int step = 0; step < horizon; ++step) {
    copies.push_back(forward(net, window));
    std::shift_left(window.begin(), window.end(), 1);
    window.back() = copies.back().output;
  }
  return copies;
}

PredictionRun predict_closed_loop(const DmlpNetwork& net, std::span<const double> seed_window,
                                  int horizon, std::size_t anchor_index) {
  const auto copies = unfold_closed_loop(net, seed_window, horizon);
  PredictionRun run{anchor_index, horizon, {}, false};
  run.predictions.reserve(copies.size());
  for (const auto& c : copies) {
    if (!std::isfinite(c.output)) {
      run.diverged = true;
      break;
    }
    run.predictions.push_back(c.output);
  }
  return run;
}

std::vector<std::size_t> anchor_range(std::size_t first, std::size_t last) {
  if (last < first) return {};
  std::vector<std::size_t> anchors(last - first + 1);
  for (std::size_t i = 0; i < anchors.size(); ++i) anchors[i] = first + i;
  return anchors;
}

std::vector<PredictionRun> closed_loop_runs(const DmlpNetwork& net, std::span<const double> series,
                                            std::span<const std::size_t> anchors, int horizon) {
  check_horizon(horizon);
  const auto n = static_cast<std::size_t>(net.config().input_delay_order);
  std::vector<PredictionRun> runs;
  runs.reserve(anchors.size());
  for (std::size_t k : anchors) {
    check_anchor(k, n - 1, horizon, series.size());
    runs.push_back(predict_closed_loop(net, series.subspan(k + 1 - n, n), horizon, k));
  }
  return runs;
}

std::vector<PredictionRun> closed_loop_runs(const NarxNetwork& net, std::span<const double> series,
                                            std::span<const std::size_t> anchors, int horizon) {
  check_horizon(horizon);
  const auto& cfg = net.config();
  const auto prime = static_cast<std::size_t>(
      std::max(cfg.input_delay_order, cfg.feedback_delay_order));
  if (!std::is_sorted(anchors.begin(), anchors.end())) {
    throw ParameterError("narx anchors must be sorted");
  }
  for (std::size_t k : anchors) check_anchor(k, prime, horizon, series.size());

  std::vector<PredictionRun> runs;
  runs.reserve(anchors.size());
  if (anchors.empty()) return runs;

  NarxHistory history = NarxHistory::primed(cfg, series.first(prime));
  double last_prediction = 0.0;
  std::size_t t = prime;
  for (std::size_t k : anchors) {
    for (; t <= k; ++t) {
      auto step = narx_forward(net, std::move(history), series[t]);
      history = std::move(step.history);
      last_prediction = step.prediction;
    }
    PredictionRun run{k, horizon, {}, false};
    run.predictions.reserve(static_cast<std::size_t>(horizon));
    NarxHistory rollout = history;
    double prediction = last_prediction;
    for (int h = 0; h < horizon; ++h) {
      if (!std::isfinite(prediction)) {
        run.diverged = true;
        break;
      }
      run.predictions.push_back(prediction);
      if (h + 1 == horizon) break;
      auto step = narx_forward(net, std::move(rollout), prediction);
      rollout = std::move(step.history);
      prediction = step.prediction;
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

HorizonScores pool_horizon_nmse(std::span<const PredictionRun> runs, const TimeSeries& series,
                                int horizon) {
  check_horizon(horizon);
  if (runs.empty()) throw DegenerateInputError("horizon_nmse: empty anchor set");
  const auto hz = static_cast<std::size_t>(horizon);
  const auto& norm = series.normalization();
  auto original = [&](double v) { return norm ? norm->invert(v) : v; };

  HorizonScores scores;
  scores.n_anchors = runs.size();
  std::vector<std::vector<double>> preds(hz), targets(hz);
  for (const auto& run : runs) {
    if (run.diverged) {
      ++scores.n_diverged;
      continue;
    }
    if (run.predictions.size() < hz || run.anchor_index + hz >= series.size()) {
      throw DimensionError("prediction run is shorter than the scored horizon");
    }
    for (std::size_t h = 0; h < hz; ++h) {
      preds[h].push_back(original(run.predictions[h]));
      targets[h].push_back(original(series[run.anchor_index + 1 + h]));
    }
  }
  if (scores.n_diverged == runs.size()) {
    throw NumericalError("horizon_nmse: every prediction run diverged");
  }
  scores.nmse.reserve(hz);
  for (std::size_t h = 0; h < hz; ++h) scores.nmse.push_back(nmse(preds[h], targets[h]));
  return scores;
}

HorizonScores horizon_nmse(const DmlpNetwork& net, const TimeSeries& series,
                           std::span<const std::size_t> anchors, int horizon) {
  if (anchors.empty()) throw DegenerateInputError("horizon_nmse: empty anchor set");
  const auto runs = closed_loop_runs(net, series.view(), anchors, horizon);
  return pool_horizon_nmse(runs, series, horizon);
}

HorizonScores horizon_nmse(const NarxNetwork& net, const TimeSeries& series,
                           std::span<const std::size_t> anchors, int horizon) {
  if (anchors.empty()) throw DegenerateInputError("horizon_nmse: empty anchor set");
  const auto runs = closed_loop_runs(net, series.view(), anchors, horizon);
  return pool_horizon_nmse(runs, series, horizon);
}

}  // namespace kfnet
