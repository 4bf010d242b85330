#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kfnet/error.hpp"
#include "kfnet/serialize.hpp"

using namespace kfnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "kfnet_test_serialize";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("dmlp model round trip is bit exact") {
  const SavedModel m{init_weights(DmlpConfig{5, 4}, 11, 0.7), Normalization{0.91, 0.23}};
  const auto path = scratch("dmlp.json");
  save_model(path, m);
  const auto back = load_model(path);
  CHECK(std::get<DmlpNetwork>(back.network) == std::get<DmlpNetwork>(m.network));
  REQUIRE(back.normalization.has_value());
  CHECK(back.normalization->mean == 0.91);
  CHECK(back.normalization->std == 0.23);
}

TEST_CASE("narx model round trip") {
  const SavedModel m{init_weights(NarxConfig{3, 2, 4, 6}, 12, 0.2), std::nullopt};
  const auto j = to_json(m);
  CHECK(j.at("kind") == "narx");
  CHECK(j.at("bptt_depth") == 6);
  CHECK(j.at("normalization").is_null());
  CHECK(j.at("weights").size() == static_cast<std::size_t>(weight_count(NarxConfig{3, 2, 4, 6})));
  const auto back = model_from_json(j);
  const auto& net = std::get<NarxNetwork>(back.network);
  CHECK(net == std::get<NarxNetwork>(m.network));
  CHECK(net.config().bptt_depth == 6);
  CHECK_FALSE(back.normalization.has_value());
}

TEST_CASE("model json validation") {
  auto j = to_json(SavedModel{init_weights(DmlpConfig{2, 2}, 1, 0.5), std::nullopt});
  auto bad = j;
  bad["format"] = "other";
  CHECK_THROWS_AS(model_from_json(bad), FormatError);
  bad = j;
  bad["version"] = 2;
  CHECK_THROWS_AS(model_from_json(bad), FormatError);
  bad = j;
  bad["weights"].erase(0);
  CHECK_THROWS_AS(model_from_json(bad), FormatError);
  bad = j;
  bad["kind"] = "rnn";
  CHECK_THROWS_AS(model_from_json(bad), FormatError);
  bad = j;
  bad.erase("hidden_units");
  CHECK_THROWS_AS(model_from_json(bad), FormatError);
}

TEST_CASE("unreadable model files") {
  CHECK_THROWS_AS(load_model(scratch("missing.json")), IoError);
  const auto path = scratch("garbage.json");
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_model(path), FormatError);
}

TEST_CASE("kalman checkpoint round trip") {
  auto s = ekf_init(4, 2e-3, 3e-8);
  s.P(0, 1) = s.P(1, 0) = 0.1234567890123456789;
  s.P(3, 3) = 1.0 / 3.0;
  const auto path = scratch("kalman.json");
  save_kalman(path, s);
  const auto back = load_kalman(path);
  CHECK(back.P == s.P);
  CHECK(back.eta == 2e-3);
  CHECK(back.mu == 3e-8);

  auto j = to_json(s);
  j["n_weights"] = 5;
  CHECK_THROWS_AS(kalman_from_json(j), FormatError);
}
