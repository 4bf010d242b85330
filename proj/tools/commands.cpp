#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kfnet/data.hpp"
#include "kfnet/error.hpp"
#include "kfnet/experiment.hpp"
#include "kfnet/predictor.hpp"
#include "kfnet/selftest.hpp"
#include "kfnet/serialize.hpp"

namespace kfnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

/// Raised for semantically invalid flag combinations found after parsing.
struct UsageError : Error {
  using Error::Error;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("KFNET_OUT_DIR"); env && *env) return env;
  return "kfnet-out";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void write_manifest(const fs::path& dir, const std::string& command, json flags, json extra = {}) {
  json manifest{{"tool", "kfnet"}, {"version", kVersion}, {"command", command},
                {"flags", std::move(flags)}};
  if (!extra.is_null()) manifest.update(extra);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

SeriesFormat format_for(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? SeriesFormat::kCsv : SeriesFormat::kLines;
}

// ---------------------------------------------------------------------------
// Data sources shared by train / predict / benchmark.

struct DataFlags {
  std::string source = "mackey-glass";
  std::string file;
  MackeyGlassParams mg;
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--data", d.source, "mackey-glass | santafe | file")
      ->check(CLI::IsMember({"mackey-glass", "santafe", "file"}));
  cmd->add_option("--data-file", d.file, "series file (one value per line, or .csv)");
}

TimeSeries load_data(const DataFlags& d, std::ostream& err) {
  if (!d.file.empty()) return load_series(d.file, format_for(d.file));
  if (d.source == "mackey-glass") return generate_mackey_glass(d.mg);
  if (d.source == "santafe") {
    err << "warning: no --data-file given; using the synthetic laser stand-in series\n";
    return generate_laser_standin();
  }
  throw UsageError("--data file requires --data-file");
}

bool is_santafe(const DataFlags& d) { return d.source == "santafe"; }

// ---------------------------------------------------------------------------
// Experiment flags.

struct ExperimentFlags {
  ExperimentConfig config;
  CLI::Option* horizon = nullptr;
  CLI::Option* order = nullptr;
  CLI::Option* n_train = nullptr;
  CLI::Option* n_test = nullptr;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  auto& c = f.config;
  f.horizon = cmd->add_option("--H,--horizon", c.horizon, "prediction horizon")->check(CLI::PositiveNumber);
  f.order = cmd->add_option("--N,--input-order", c.input_delay_order, "input tapped-delay order")
                ->check(CLI::PositiveNumber);
  cmd->add_option("--L,--feedback-order", c.feedback_delay_order, "NARX feedback delay order")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--bptt-depth", c.bptt_depth, "NARX truncated BPTT depth")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", c.epochs)->check(CLI::PositiveNumber);
  cmd->add_option("--eta", c.eta, "measurement noise scale (R = eta I)");
  cmd->add_option("--mu", c.mu, "process noise scale (Q = mu I)");
  cmd->add_option("--init-scale", c.init_scale, "initial weights ~ U[-s, s]");
  cmd->add_option("--seed", c.seed);
  f.n_train = cmd->add_option("--n-train", c.n_train)->check(CLI::PositiveNumber);
  f.n_test = cmd->add_option("--n-test", c.n_test)->check(CLI::PositiveNumber);
}

/// Applies dataset defaults (Santa Fe: 1000/100 split, N = 25, H = 100,
/// single-trajectory scoring) unless the user set the flag.
void resolve_dataset_defaults(ExperimentFlags& f, const DataFlags& d) {
  if (!is_santafe(d)) return;
  auto& c = f.config;
  if (f.horizon->count() == 0) c.horizon = 100;
  if (f.order->count() == 0) c.input_delay_order = 25;
  if (f.n_train->count() == 0) c.n_train = 1000;
  if (f.n_test->count() == 0) c.n_test = 100;
  c.eval = EvalMode::kSingleTrajectory;
}

json config_json(const ExperimentConfig& c) {
  return json{{"method", to_string(c.method)},
              {"ensemble_size", c.ensemble_size},
              {"epochs", c.epochs},
              {"horizon", c.horizon},
              {"input_delay_order", c.input_delay_order},
              {"feedback_delay_order", c.feedback_delay_order},
              {"bptt_depth", c.bptt_depth},
              {"hidden_min", c.hidden_min},
              {"hidden_max", c.hidden_max},
              {"eta", c.eta},
              {"mu", c.mu},
              {"init_scale", c.init_scale},
              {"seed", c.seed},
              {"n_train", c.n_train},
              {"n_test", c.n_test},
              {"eval", c.eval == EvalMode::kPooledAnchors ? "pooled-anchors" : "single-trajectory"},
              {"jobs", c.jobs}};
}

json data_json(const DataFlags& d, const TimeSeries& series) {
  json j{{"source", d.source}, {"name", series.name()}, {"length", series.size()}};
  if (!d.file.empty()) j["file"] = d.file;
  if (d.file.empty() && d.source == "mackey-glass") {
    j["mackey_glass"] = {{"a", d.mg.a},           {"b", d.mg.b},
                         {"tau", d.mg.tau},       {"length", d.mg.length},
                         {"init", d.mg.init_value}, {"washout", d.mg.washout}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_gen(const std::string& series_kind, const MackeyGlassParams& mg, const fs::path& out_path,
            std::ostream& out) {
  TimeSeries series = series_kind == "laser-standin"
                          ? generate_laser_standin({mg.length, LaserStandinParams{}.washout})
                          : generate_mackey_glass(mg);
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  write_series(out_path, series.view());
  json flags{{"series", series_kind}, {"a", mg.a},       {"b", mg.b},
             {"tau", mg.tau},         {"len", mg.length}, {"washout", mg.washout},
             {"init", mg.init_value}, {"out", out_path.string()}};
  write_text(fs::path(out_path.string() + ".manifest.json"),
             json{{"tool", "kfnet"}, {"version", kVersion}, {"command", "gen"}, {"flags", flags}}
                     .dump(2) +
                 "\n");
  out << "wrote " << series.size() << " values to " << out_path.string() << "\n";
  return kOk;
}

int cmd_train(ExperimentConfig config, int hidden_units, const DataFlags& data, const fs::path& dir,
              std::ostream& out, std::ostream& err) {
  const TimeSeries series = load_data(data, err);
  config.ensemble_size = 1;
  config.hidden_min = config.hidden_max = hidden_units;
  const auto outcome = train_member(config, series, 0);
  if (!outcome.model) {
    err << "error: " << outcome.failure << "\n";
    return kDiverged;
  }
  const auto& model = *outcome.model;
  ensure_dir(dir);
  save_model(dir / "model.json", SavedModel{model.network, model.normalization});
  std::ostringstream log;
  write_training_log_csv(log, model);
  write_text(dir / "training_log.csv", log.str());
  write_manifest(dir, "train", config_json(config),
                 json{{"data", data_json(data, series)},
                      {"member_seed", outcome.member_seed},
                      {"hidden_units", hidden_units},
                      {"best_epoch", model.best_epoch}});

  out << std::setprecision(6) << to_string(config.method) << ": best epoch " << model.best_epoch
      << ", selection score " << model.selection_score << "\n";
  for (std::size_t i = 0; i < model.test_horizons.size(); ++i) {
    out << "  test nmse h=" << model.test_horizons[i] << ": " << model.test_scores[i] << "\n";
  }
  return kOk;
}

int cmd_predict(const fs::path& model_path, const DataFlags& data, int horizon,
                std::optional<std::size_t> first, std::optional<std::size_t> last, std::size_t n_train,
                const fs::path& dir, std::ostream& out, std::ostream& err) {
  const SavedModel saved = load_model(model_path);
  TimeSeries series = load_data(data, err);
  if (saved.normalization) {
    std::vector<double> v(series.values());
    for (double& x : v) x = saved.normalization->apply(x);
    series = TimeSeries(series.name(), std::move(v), saved.normalization);
  }
  const auto hz = static_cast<std::size_t>(horizon);
  if (series.size() <= hz) throw UsageError("series is shorter than the horizon");
  const std::size_t lo = first.value_or(n_train - 1);
  const std::size_t hi = last.value_or(series.size() - 1 - hz);
  const auto anchors = anchor_range(lo, hi);
  if (anchors.empty()) throw UsageError("empty anchor range");

  const auto runs = std::visit(
      [&](const auto& net) { return closed_loop_runs(net, series.view(), anchors, horizon); },
      saved.network);
  auto original = [&](double v) { return saved.normalization ? saved.normalization->invert(v) : v; };

  ensure_dir(dir);
  std::ostringstream pred;
  pred << std::setprecision(17) << "anchor,h,prediction,target\n";
  for (const auto& run : runs) {
    for (std::size_t h = 0; h < run.predictions.size(); ++h) {
      pred << run.anchor_index << ',' << h + 1 << ',' << original(run.predictions[h]) << ','
           << original(series[run.anchor_index + 1 + h]) << '\n';
    }
  }
  write_text(dir / "predictions.csv", pred.str());

  std::ostringstream agg;
  agg << std::setprecision(17) << "h,nmse,n_anchors,n_diverged\n";
  if (runs.size() >= 2) {
    const auto scores = pool_horizon_nmse(runs, series, horizon);
    for (std::size_t h = 0; h < scores.nmse.size(); ++h) {
      agg << h + 1 << ',' << scores.nmse[h] << ',' << scores.n_anchors << ',' << scores.n_diverged
          << '\n';
    }
    out << "pooled nmse at h=" << horizon << ": " << scores.nmse.back() << " over "
        << scores.n_anchors << " anchors\n";
  } else if (!runs.front().diverged) {
    std::vector<double> p, t;
    for (std::size_t h = 0; h < hz; ++h) {
      p.push_back(original(runs.front().predictions[h]));
      t.push_back(original(series[lo + 1 + h]));
    }
    const double score = nmse(p, t);
    agg << horizon << ',' << score << ",1,0\n";
    out << "trajectory nmse over " << horizon << " steps: " << score << "\n";
  } else {
    agg << horizon << ",nan,1,1\n";
  }
  write_text(dir / "aggregate.csv", agg.str());
  write_manifest(dir, "predict",
                 json{{"model", model_path.string()},
                      {"horizon", horizon},
                      {"anchor_first", lo},
                      {"anchor_last", hi}},
                 json{{"data", data_json(data, series)}});
  return kOk;
}

void print_table(std::ostream& out, std::span<const BenchmarkResult> results) {
  const std::vector<int> preferred{1, 2, 6, 8, 10, 12, 14};
  std::vector<int> columns;
  const auto& scored = results.front().horizons;
  for (int h : preferred) {
    if (std::find(scored.begin(), scored.end(), h) != scored.end()) columns.push_back(h);
  }
  if (columns.empty() || columns.back() != scored.back()) columns.push_back(scored.back());

  out << std::left << std::setw(16) << "method";
  for (int h : columns) out << std::setw(11) << ("H=" + std::to_string(h));
  out << "failed\n";
  for (const auto& r : results) {
    out << std::setw(16) << to_string(r.config.method);
    for (int h : columns) {
      std::ostringstream cell;
      cell << std::setprecision(4) << mean_at(r, h);
      out << std::setw(11) << cell.str();
    }
    out << r.n_failed << "\n";
  }
  out << std::setw(16) << "best member";
  out << "\n";
  for (const auto& r : results) {
    out << std::setw(16) << to_string(r.config.method);
    for (int h : columns) {
      std::ostringstream cell;
      cell << std::setprecision(4) << best_at(r, h);
      out << std::setw(11) << cell.str();
    }
    out << "\n";
  }
  out << std::right;
}

int cmd_benchmark(ExperimentConfig base, const std::vector<std::string>& method_names,
                  const DataFlags& data, const fs::path& dir, std::ostream& out,
                  std::ostream& err) {
  std::vector<Method> methods;
  for (const auto& name : method_names) {
    if (name == "all") {
      const auto all = all_methods();
      methods.insert(methods.end(), all.begin(), all.end());
    } else {
      try {
        methods.push_back(parse_method(name));
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (methods.empty()) throw UsageError("no methods selected");

  const TimeSeries series = load_data(data, err);
  std::vector<BenchmarkResult> results;
  json runs = json::array();
  for (Method m : methods) {
    ExperimentConfig c = base;
    c.method = m;
    results.push_back(run_benchmark(c, series));
    json members = json::array();
    for (const auto& mem : results.back().members) {
      members.push_back({{"index", mem.member_index},
                         {"seed", mem.member_seed},
                         {"hidden_units", mem.hidden_units},
                         {"failed", !mem.model.has_value()},
                         {"failure", mem.failure}});
    }
    runs.push_back({{"config", config_json(c)}, {"members", members}});
  }

  ensure_dir(dir);
  std::ostringstream summary, detail;
  write_summary_csv(summary, results);
  write_results_csv(detail, results);
  write_text(dir / "summary.csv", summary.str());
  write_text(dir / "results.csv", detail.str());
  write_manifest(dir, "benchmark", config_json(base),
                 json{{"data", data_json(data, series)}, {"runs", runs}});
  print_table(out, results);
  return kOk;
}

int cmd_selftest(std::ostream& out) {
  const auto checks = run_selftest();
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(64) << c.name << std::right
        << std::scientific << std::setprecision(2) << c.value << " (limit " << c.threshold
        << ")\n"
        << std::defaultfloat;
  }
  out << (ok ? "selftest: all checks passed\n" : "selftest: FAILED\n");
  return ok ? kOk : kSelftestFailed;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kalman-filter-trained neural forecasters and multi-step benchmarks", "kfnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a benchmark series");
  std::string series_kind = "mackey-glass";
  MackeyGlassParams mg;
  std::string gen_out;
  gen->add_option("--series", series_kind)->check(CLI::IsMember({"mackey-glass", "laser-standin"}));
  gen->add_option("--a", mg.a);
  gen->add_option("--b", mg.b);
  gen->add_option("--tau", mg.tau)->check(CLI::PositiveNumber);
  gen->add_option("--len", mg.length, "number of values")->check(CLI::PositiveNumber);
  gen->add_option("--washout", mg.washout);
  gen->add_option("--init", mg.init_value, "constant initial history");
  gen->add_option("--out", gen_out, "output file")->required();

  // train
  auto* train = app.add_subcommand("train", "train one network and score it on the test split");
  DataFlags train_data;
  ExperimentFlags train_flags;
  std::string train_method = "dmlp-bekf-fptt";
  int train_hidden = 5;
  std::string train_dir;
  train->add_option("--method", train_method);
  train->add_option("--hidden", train_hidden, "hidden units")->check(CLI::PositiveNumber);
  train->add_option("--out-dir", train_dir);
  add_data_flags(train, train_data);
  add_experiment_flags(train, train_flags);

  // predict
  auto* predict = app.add_subcommand("predict", "closed-loop forecasts from a saved model");
  DataFlags pred_data;
  std::string model_path, pred_dir;
  int pred_horizon = 14;
  std::size_t pred_train = 500;
  std::optional<std::size_t> anchor_first, anchor_last;
  predict->add_option("--model", model_path)->required();
  predict->add_option("--H,--horizon", pred_horizon)->check(CLI::PositiveNumber);
  predict->add_option("--n-train", pred_train, "default first anchor is n-train - 1")
      ->check(CLI::PositiveNumber);
  predict->add_option("--anchor-first", anchor_first);
  predict->add_option("--anchor-last", anchor_last);
  predict->add_option("--out-dir", pred_dir);
  add_data_flags(predict, pred_data);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "ensemble benchmark over one or more methods");
  DataFlags bench_data;
  ExperimentFlags bench_flags;
  std::vector<std::string> bench_methods{"all"};
  std::string bench_dir;
  bench->add_option("--methods", bench_methods, "all | dmlp-ekf-bp | dmlp-bekf-fptt | narx-ekf-bptt")
      ->delimiter(',');
  bench->add_option("--ensemble", bench_flags.config.ensemble_size)->check(CLI::PositiveNumber);
  bench->add_option("--hidden-min", bench_flags.config.hidden_min)->check(CLI::PositiveNumber);
  bench->add_option("--hidden-max", bench_flags.config.hidden_max)->check(CLI::PositiveNumber);
  bench->add_option("--jobs", bench_flags.config.jobs)->check(CLI::PositiveNumber);
  bench->add_option("--out-dir", bench_dir);
  add_data_flags(bench, bench_data);
  add_experiment_flags(bench, bench_flags);

  auto* selftest = app.add_subcommand("selftest", "run the fast invariant suite");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(series_kind, mg, gen_out, out);
    if (train->parsed()) {
      resolve_dataset_defaults(train_flags, train_data);
      try {
        train_flags.config.method = parse_method(train_method);
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
      return cmd_train(train_flags.config, train_hidden, train_data,
                       train_dir.empty() ? default_out_dir() : fs::path(train_dir), out, err);
    }
    if (predict->parsed()) {
      return cmd_predict(model_path, pred_data, pred_horizon, anchor_first, anchor_last, pred_train,
                         pred_dir.empty() ? default_out_dir() : fs::path(pred_dir), out, err);
    }
    if (bench->parsed()) {
      resolve_dataset_defaults(bench_flags, bench_data);
      return cmd_benchmark(bench_flags.config, bench_methods, bench_data,
                           bench_dir.empty() ? default_out_dir() : fs::path(bench_dir), out, err);
    }
    if (selftest->parsed()) return cmd_selftest(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const DegenerateInputError& e) {
    err << "input error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace kfnet::cli
