#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kfnet/data.hpp"
#include "kfnet/ekf.hpp"
#include "kfnet/mlp.hpp"
#include "kfnet/narx.hpp"

namespace kfnet {

enum class Method { kDmlpEkfBp, kDmlpBekfFptt, kNarxEkfBptt };

std::string_view to_string(Method method);
/// Accepts "dmlp-ekf-bp", "dmlp-bekf-fptt", "narx-ekf-bptt".
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

/// How the selected snapshot is scored on the test split.
enum class EvalMode {
  /// Per-horizon NMSE pooled over every test anchor (stride 1).
  kPooledAnchors,
  /// One closed-loop trajectory from the train/test boundary, scored as a
  /// whole against the first H test values.
  kSingleTrajectory,
};

struct ExperimentConfig {
  Method method = Method::kDmlpBekfFptt;
  int ensemble_size = 20;
  int epochs = 50;
  int horizon = 14;
  int input_delay_order = 5;
  int feedback_delay_order = 5;
  int bptt_depth = 5;
  int hidden_min = 3;
  int hidden_max = 8;
  double eta = 1e-3;
  double mu = 1e-8;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
  std::size_t n_train = 500;
  std::size_t n_test = 100;
  EvalMode eval = EvalMode::kPooledAnchors;
  /// Members trained concurrently; results do not depend on it.
  int jobs = 1;
};

void validate(const ExperimentConfig& config, std::size_t series_length);

int member_hidden_units(const ExperimentConfig& config, int member_index);
std::uint64_t member_seed(const ExperimentConfig& config, int member_index);

using Network = std::variant<DmlpNetwork, NarxNetwork>;

struct EpochRecord {
  int epoch = 0;
  double train_ms_nmse = 0.0;
};

struct TrainedModel {
  Network network;
  Normalization normalization;
  int best_epoch = 0;
  /// Lowest per-epoch train-split NMSE at horizon H.
  double selection_score = 0.0;
  /// Horizon label of each entry of `test_scores`.
  std::vector<int> test_horizons;
  std::vector<double> test_scores;
  std::vector<EpochRecord> epoch_log;
};

struct MemberOutcome {
  int member_index = 0;
  std::uint64_t member_seed = 0;
  int hidden_units = 0;
  std::optional<TrainedModel> model;
  /// Reason when `model` is empty.
  std::string failure;
};

/// Per-sample EKF over the split: for each k = N-1 .. size-2, forward on the
/// window ending at k, backpropagate delta = 1, single-row update with
/// residual y(k+1) - y_hat(k+1).
void train_epoch_ekf_bp(DmlpNetwork& net, KalmanState& kalman, std::span<const double> train);

/// Forward-only steps after priming before the first NARX update:
/// max(N, L, h).
std::size_t narx_warmup_steps(const NarxConfig& config);

/// Primes the delay lines with the first max(N, L) samples, runs the warm-up
/// steps forward only, then per step: narx_forward, bptt_jacobian and a
/// single-row update. Feedback inputs are the network's own predictions.
void train_epoch_narx(NarxNetwork& net, KalmanState& kalman, std::span<const double> train);

/// Trains one ensemble member on the first n_train + n_test values of
/// `series`, z-scored with train statistics. Divergence is reported in the
/// outcome, not thrown.
MemberOutcome train_member(const ExperimentConfig& config, const TimeSeries& series,
                           int member_index);

struct BenchmarkResult {
  ExperimentConfig config;
  std::vector<int> horizons;
  /// In member-index order.
  std::vector<MemberOutcome> members;
  /// Mean and minimum over successful members, aligned with `horizons`.
  std::vector<double> mean_nmse;
  std::vector<double> best_nmse;
  int n_failed = 0;
};

/// Throws NumericalError if every member fails.
BenchmarkResult run_benchmark(const ExperimentConfig& config, const TimeSeries& series);

/// Value of `result.mean_nmse` (or best) at horizon label h.
double mean_at(const BenchmarkResult& result, int h);
double best_at(const BenchmarkResult& result, int h);

/// method,member_seed,hidden_units,best_epoch,h,nmse
void write_results_csv(std::ostream& out, std::span<const BenchmarkResult> results);
/// method,h,mean_nmse,best_nmse,n_failed
void write_summary_csv(std::ostream& out, std::span<const BenchmarkResult> results);
/// epoch,train_ms_nmse,selected
void write_training_log_csv(std::ostream& out, const TrainedModel& model);

}  // namespace kfnet
