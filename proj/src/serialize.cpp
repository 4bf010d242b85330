#include "kfnet/serialize.hpp"

#include <fstream>
#include <string>

#include "kfnet/error.hpp"

namespace kfnet {

using nlohmann::json;

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void expect_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw FormatError(std::string("expected a '") + format + "' document");
  }
  if (j.value("version", 0) != 1) throw FormatError("unsupported document version");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace

json to_json(const SavedModel& model) {
  json j{{"format", "kfnet-model"}, {"version", 1}};
  std::visit(
      [&](const auto& net) {
        using T = std::decay_t<decltype(net)>;
        const auto& cfg = net.config();
        j["input_delay_order"] = cfg.input_delay_order;
        j["hidden_units"] = cfg.hidden_units;
        if constexpr (std::is_same_v<T, NarxNetwork>) {
          j["kind"] = "narx";
          j["feedback_delay_order"] = cfg.feedback_delay_order;
          j["bptt_depth"] = cfg.bptt_depth;
        } else {
          j["kind"] = "dmlp";
        }
        j["weights"] = to_vector(flat_weights(net));
      },
      model.network);
  j["normalization"] = model.normalization
                           ? json{{"mean", model.normalization->mean}, {"std", model.normalization->std}}
                           : json(nullptr);
  return j;
}

SavedModel model_from_json(const json& j) {
  expect_format(j, "kfnet-model");
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto weights = to_eigen(j.at("weights").get<std::vector<double>>());
    std::optional<Normalization> norm;
    if (const auto& n = j.at("normalization"); !n.is_null()) {
      norm = Normalization{n.at("mean").get<double>(), n.at("std").get<double>()};
      if (!(norm->std > 0.0)) throw FormatError("model normalization std must be positive");
    }
    if (kind == "dmlp") {
      const DmlpConfig cfg{j.at("input_delay_order").get<int>(), j.at("hidden_units").get<int>()};
      return {set_flat_weights(DmlpNetwork(cfg), weights), norm};
    }
    if (kind == "narx") {
      const NarxConfig cfg{j.at("input_delay_order").get<int>(),
                           j.at("feedback_delay_order").get<int>(), j.at("hidden_units").get<int>(),
                           j.at("bptt_depth").get<int>()};
      return {set_flat_weights(NarxNetwork(cfg), weights), norm};
    }
    throw FormatError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const SavedModel& model) {
  write_json(path, to_json(model));
}

SavedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

json to_json(const KalmanState& state) {
  const Eigen::Index n = state.P.rows();
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) p.push_back(state.P(r, c));
  return json{{"format", "kfnet-kalman"}, {"version", 1}, {"n_weights", n},
              {"eta", state.eta},         {"mu", state.mu},  {"P", p}};
}

KalmanState kalman_from_json(const json& j) {
  expect_format(j, "kfnet-kalman");
  try {
    const auto n = j.at("n_weights").get<Eigen::Index>();
    const auto p = j.at("P").get<std::vector<double>>();
    if (n < 1 || static_cast<Eigen::Index>(p.size()) != n * n) {
      throw FormatError("kalman checkpoint: P does not hold n_weights^2 values");
    }
    KalmanState state = ekf_init(n, j.at("eta").get<double>(), j.at("mu").get<double>());
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) state.P(r, c) = p[static_cast<std::size_t>(r * n + c)];
    return state;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed kalman checkpoint: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid kalman checkpoint: ") + e.what());
  }
}

void save_kalman(const std::filesystem::path& path, const KalmanState& state) {
  write_json(path, to_json(state));
}

KalmanState load_kalman(const std::filesystem::path& path) {
  return kalman_from_json(read_json(path));
}

}  // namespace kfnet
