#include "kfnet/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "kfnet/error.hpp"

namespace kfnet {

namespace {

void check_finite(std::span<const double> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericalError(what + ": non-finite value at index " + std::to_string(i));
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view text) {
  // from_chars rejects a leading '+'.
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

TimeSeries::TimeSeries(std::string name, std::vector<double> values,
                       std::optional<Normalization> normalization)
    : name_(std::move(name)), values_(std::move(values)), normalization_(normalization) {
  if (values_.empty()) throw DegenerateInputError("time series '" + name_ + "' is empty");
  check_finite(values_, "time series '" + name_ + "'");
  if (normalization_ && !(normalization_->std > 0.0)) {
    throw ParameterError("normalization std must be positive");
  }
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin > values_.size() || count > values_.size() - begin) {
    throw DimensionError("slice [" + std::to_string(begin) + ", +" + std::to_string(count) +
                         ") exceeds series length " + std::to_string(values_.size()));
  }
  return TimeSeries(name_, {values_.begin() + begin, values_.begin() + begin + count},
                    normalization_);
}

void validate(const MackeyGlassParams& p) {
  if (p.tau < 1) throw ParameterError("mackey-glass: tau must be >= 1");
  if (p.length == 0) throw ParameterError("mackey-glass: length must be > 0");
  if (!(p.b >= 0.0 && p.b < 1.0)) throw ParameterError("mackey-glass: b must lie in [0, 1)");
  if (!std::isfinite(p.a) || !std::isfinite(p.init_value)) {
    throw ParameterError("mackey-glass: a and init_value must be finite");
  }
}

TimeSeries generate_mackey_glass(const MackeyGlassParams& p,
                                 std::optional<std::span<const double>> seed_history) {
  validate(p);
  const auto tau = static_cast<std::size_t>(p.tau);
  std::vector<double> x;
  x.reserve(tau + 1 + p.washout + p.length);
  if (seed_history) {
    if (seed_history->size() != tau + 1) {
      throw ParameterError("mackey-glass: seed history must hold tau+1 = " +
                           std::to_string(tau + 1) + " values");
    }
    check_finite(*seed_history, "mackey-glass seed history");
    x.assign(seed_history->begin(), seed_history->end());
  } else {
    x.assign(tau + 1, p.init_value);
  }

  const std::size_t total = p.washout + p.length;
  for (std::size_t n = 0; n < total; ++n) {
    const std::size_t t = x.size() - 1;
    const double lagged = x[t - tau];
    const double next = (1.0 - p.b) * x[t] + p.a * lagged / (1.0 + std::pow(lagged, 10));
    if (!std::isfinite(next)) {
      throw NumericalError("mackey-glass: non-finite iterate at t = " + std::to_string(t + 1));
    }
    x.push_back(next);
  }
  std::vector<double> out(x.end() - static_cast<std::ptrdiff_t>(p.length), x.end());
  return TimeSeries("mackey-glass", std::move(out));
}

TimeSeries generate_laser_standin(const LaserStandinParams& p) {
  if (p.length == 0 || p.substeps < 1 || !(p.sample_interval > 0.0)) {
    throw ParameterError("laser stand-in: length, substeps and sample_interval must be positive");
  }
  constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  using State = std::array<double, 3>;
  auto deriv = [](const State& s) {
    return State{sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]};
  };
  const double dt = p.sample_interval / p.substeps;
  auto rk4 = [&](State s) {
    const State k1 = deriv(s);
    State t{};
    for (int i = 0; i < 3; ++i) t[i] = s[i] + 0.5 * dt * k1[i];
    const State k2 = deriv(t);
    for (int i = 0; i < 3; ++i) t[i] = s[i] + 0.5 * dt * k2[i];
    const State k3 = deriv(t);
    for (int i = 0; i < 3; ++i) t[i] = s[i] + dt * k3[i];
    const State k4 = deriv(t);
    for (int i = 0; i < 3; ++i) s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return s;
  };

  State s{1.0, 1.0, 20.0};
  std::vector<double> intensity;
  intensity.reserve(p.length);
  for (std::size_t n = 0; n < p.washout + p.length; ++n) {
    for (int j = 0; j < p.substeps; ++j) s = rk4(s);
    if (n >= p.washout) intensity.push_back(s[0] * s[0]);
  }
  const double peak = *std::max_element(intensity.begin(), intensity.end());
  for (double& v : intensity) v = std::round(255.0 * v / peak);
  return TimeSeries("laser-standin", std::move(intensity));
}

TimeSeries load_series(const std::filesystem::path& path, SeriesFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    std::string_view field = text;
    if (format == SeriesFormat::kCsv) {
      if (field.find(',') != std::string_view::npos) {
        throw ParseError("expected a single CSV column in '" + path.string() + "'", line_no);
      }
      if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
        field = trim(field.substr(1, field.size() - 2));
      }
    }
    const auto value = parse_real(field);
    if (!value) {
      if (format == SeriesFormat::kCsv && !seen_content) {
        seen_content = true;  // header
        continue;
      }
      throw ParseError("not a finite real number: '" + std::string(field) + "' in '" +
                           path.string() + "'",
                       line_no);
    }
    seen_content = true;
    values.push_back(*value);
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  if (values.empty()) throw DegenerateInputError("'" + path.string() + "' contains no values");
  return TimeSeries(path.stem().string(), std::move(values));
}

void write_series(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double v : values) out << v << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DegenerateInputError("mean of an empty sequence");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size());
}

TimeSeries normalize(const TimeSeries& series, IndexRange reference) {
  if (reference.begin >= reference.end || reference.end > series.size()) {
    throw DimensionError("normalization reference range is empty or out of bounds");
  }
  const auto ref = series.view().subspan(reference.begin, reference.size());
  const double var = population_variance(ref);
  if (!(var > 0.0)) throw DegenerateInputError("normalization reference has zero variance");
  const Normalization norm{mean(ref), std::sqrt(var)};

  std::vector<double> out(series.values());
  for (double& v : out) v = norm.apply(v);
  return TimeSeries(series.name(), std::move(out), norm);
}

TimeSeries denormalize(const TimeSeries& series) {
  if (!series.normalization()) return series;
  const auto norm = *series.normalization();
  std::vector<double> out(series.values());
  for (double& v : out) v = norm.invert(v);
  return TimeSeries(series.name(), std::move(out));
}

double nmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw DimensionError("nmse: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw DegenerateInputError("nmse: empty input");
  const double var = population_variance(targets);
  if (!(var > 0.0)) throw DegenerateInputError("nmse: targets have zero variance");
  double sse = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sse += d * d;
  }
  return sse / static_cast<double>(targets.size()) / var;
}

}  // namespace kfnet
