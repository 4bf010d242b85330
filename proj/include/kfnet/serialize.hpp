#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include <json.hpp>

#include "kfnet/data.hpp"
#include "kfnet/ekf.hpp"
#include "kfnet/mlp.hpp"
#include "kfnet/narx.hpp"

namespace kfnet {

/// A network together with the normalization its inputs expect.
///
/// JSON layout:
///   {"format": "kfnet-model", "version": 1,
///    "kind": "dmlp" | "narx",
///    "input_delay_order": N, "hidden_units": U,
///    "feedback_delay_order": L, "bptt_depth": h,      (narx only)
///    "normalization": {"mean": m, "std": s} | null,
///    "weights": [N_w reals, hidden layer row-major then output layer]}
struct SavedModel {
  std::variant<DmlpNetwork, NarxNetwork> network;
  std::optional<Normalization> normalization;
};

nlohmann::json to_json(const SavedModel& model);
SavedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const SavedModel& model);
SavedModel load_model(const std::filesystem::path& path);

/// Kalman checkpoint:
///   {"format": "kfnet-kalman", "version": 1, "n_weights": N_w,
///    "eta": .., "mu": .., "P": [N_w*N_w reals, row-major]}
nlohmann::json to_json(const KalmanState& state);
KalmanState kalman_from_json(const nlohmann::json& j);

void save_kalman(const std::filesystem::path& path, const KalmanState& state);
KalmanState load_kalman(const std::filesystem::path& path);

}  // namespace kfnet
