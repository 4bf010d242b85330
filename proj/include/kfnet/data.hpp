#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kfnet {

/// Affine transform applied by `normalize`: stored = (raw - mean) / std.
struct Normalization {
  double mean = 0.0;
  double std = 1.0;

  double apply(double raw) const { return (raw - mean) / std; }
  double invert(double stored) const { return stored * std + mean; }
};

/// Named, ordered, non-empty sequence of finite samples.
class TimeSeries {
 public:
  TimeSeries(std::string name, std::vector<double> values,
             std::optional<Normalization> normalization = std::nullopt);

  const std::string& name() const { return name_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> view() const { return values_; }
  const std::optional<Normalization>& normalization() const { return normalization_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Contiguous copy of [begin, begin + count), keeping name and metadata.
  TimeSeries slice(std::size_t begin, std::size_t count) const;

 private:
  std::string name_;
  std::vector<double> values_;
  std::optional<Normalization> normalization_;
};

/// Discrete Mackey-Glass map
///   x[t+1] = (1 - b) x[t] + a x[t-tau] / (1 + x[t-tau]^10).
/// Defaults are the usual chaotic benchmark setting; with a and b swapped
/// the map has no positive fixed point and decays to zero.
struct MackeyGlassParams {
  double a = 0.2;
  double b = 0.1;
  int tau = 17;
  std::size_t length = 600;
  double init_value = 1.2;
  std::size_t washout = 500;
};

void validate(const MackeyGlassParams& params);

/// Iterates the map from a history x[0..tau] (constant `init_value` unless
/// `seed_history` is given), drops `washout` iterates, returns `length`.
/// The first iterate produced is x[tau+1].
TimeSeries generate_mackey_glass(const MackeyGlassParams& params,
                                 std::optional<std::span<const double>> seed_history = std::nullopt);

/// Lorenz-type laser intensity series used as a stand-in when the real
/// Santa Fe laser recording is not available. Produces spiky pulses whose
/// envelope grows and then collapses, scaled to roughly 0..255.
struct LaserStandinParams {
  std::size_t length = 1100;
  std::size_t washout = 2000;
  double sample_interval = 0.08;
  int substeps = 8;
};

TimeSeries generate_laser_standin(const LaserStandinParams& params = {});

enum class SeriesFormat { kLines, kCsv };

/// Reads one value per line, or a single-column CSV with an optional header
/// line. Blank lines are skipped.
TimeSeries load_series(const std::filesystem::path& path, SeriesFormat format = SeriesFormat::kLines);

/// Writes one value per line with round-trip precision.
void write_series(const std::filesystem::path& path, std::span<const double> values);

/// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
};

/// Z-scores the whole series with mean/std measured over `reference` only.
TimeSeries normalize(const TimeSeries& series, IndexRange reference);

/// Undo `normalize`; a series without metadata is returned unchanged.
TimeSeries denormalize(const TimeSeries& series);

double mean(std::span<const double> values);
double population_variance(std::span<const double> values);

/// mean((p - t)^2) / population_variance(t).
double nmse(std::span<const double> predictions, std::span<const double> targets);

}  // namespace kfnet
