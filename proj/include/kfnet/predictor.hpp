#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kfnet/data.hpp"
#include "kfnet/mlp.hpp"
#include "kfnet/narx.hpp"

namespace kfnet {

/// Closed-loop forecast y_hat(k+1..k+H) issued at anchor k (the index of the
/// latest observed sample).
struct PredictionRun {
  std::size_t anchor_index = 0;
  int horizon = 0;
  std::vector<double> predictions;
  /// A non-finite prediction was produced; the run stops there.
  bool diverged = false;
};

/// Iterates the network H times: the first step sees the true seed window,
/// each later step drops the oldest sample and appends the previous
/// prediction. Returns every step's forward cache in order.
std::vector<ForwardCache> unfold_closed_loop(const DmlpNetwork& net,
                                             std::span<const double> seed_window, int horizon);

PredictionRun predict_closed_loop(const DmlpNetwork& net, std::span<const double> seed_window,
                                  int horizon, std::size_t anchor_index = 0);

/// Consecutive anchors first..last inclusive.
std::vector<std::size_t> anchor_range(std::size_t first, std::size_t last);

/// One run per anchor, in anchor order. Anchor k needs k >= N-1 and k+H < size.
std::vector<PredictionRun> closed_loop_runs(const DmlpNetwork& net, std::span<const double> series,
                                            std::span<const std::size_t> anchors, int horizon);

/// The NARX state at anchor k comes from priming with the first max(N, L)
/// samples and stepping the network through y(max(N,L))..y(k) with its own
/// predictions fed back; the forecast then continues in closed loop.
/// Anchor k needs k >= max(N, L) and k+H < size.
std::vector<PredictionRun> closed_loop_runs(const NarxNetwork& net, std::span<const double> series,
                                            std::span<const std::size_t> anchors, int horizon);

struct HorizonScores {
  /// nmse[h-1] pools y_hat(k+h) against y(k+h) over all non-diverged anchors.
  std::vector<double> nmse;
  std::size_t n_anchors = 0;
  std::size_t n_diverged = 0;
};

/// Per-horizon pooled NMSE. If `series` carries normalization metadata both
/// predictions and targets are mapped back to the original scale first.
HorizonScores pool_horizon_nmse(std::span<const PredictionRun> runs, const TimeSeries& series,
                                int horizon);

HorizonScores horizon_nmse(const DmlpNetwork& net, const TimeSeries& series,
                           std::span<const std::size_t> anchors, int horizon);
HorizonScores horizon_nmse(const NarxNetwork& net, const TimeSeries& series,
                           std::span<const std::size_t> anchors, int horizon);

}  // namespace kfnet
