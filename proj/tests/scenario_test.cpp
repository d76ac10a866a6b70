#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "cpf/scenario.hpp"

namespace cpf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kScenarioDir = CPF_SCENARIO_DIR;

std::string config_error(const json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<no error>";
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << content;
  return p;
}

TEST(Scenario, ShippedFilesLoad) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW(load_scenario_file(entry.path()));
    ++count;
  }
  EXPECT_GE(count, 4);
}

TEST(Scenario, DefaultMatchesShippedCourse) {
  const Scenario file = load_scenario_file(kScenarioDir / "fig5_cc.json");
  EXPECT_EQ(scenario_hash(file), scenario_hash(default_scenario()));
  const Scenario mc = load_scenario_file(kScenarioDir / "fig5_mc.json");
  EXPECT_EQ(mc.mode, ControlMode::kManual);
  EXPECT_NE(scenario_hash(mc), scenario_hash(file));
}

TEST(Scenario, JsonRoundTripKeepsHash) {
  for (const char* name : {"fig5_cc.json", "fig5_compliant.json", "straight_convergence.json"}) {
    const Scenario s = load_scenario_file(kScenarioDir / name);
    const Scenario again = scenario_from_json(to_json(s));
    EXPECT_EQ(to_json(again), to_json(s)) << name;
    EXPECT_EQ(scenario_hash(again), scenario_hash(s)) << name;
  }
}

TEST(Scenario, HashIsSixteenHexDigitsAndSensitive) {
  Scenario s = default_scenario();
  const std::string h = scenario_hash(s);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
  s.seed = 2;
  EXPECT_NE(scenario_hash(s), h);
}

TEST(Scenario, UnknownKeyIsNamed) {
  json doc = to_json(default_scenario());
  doc["vehicle"]["wheels"] = 4;
  EXPECT_EQ(config_error(doc), "vehicle.wheels: unknown key");
  doc = to_json(default_scenario());
  doc["colour"] = "red";
  EXPECT_EQ(config_error(doc), "colour: unknown key");
}

TEST(Scenario, BadValuesNameTheirKeyPath) {
  json doc = to_json(default_scenario());
  doc["path"]["segments"][1]["radius"] = "big";
  EXPECT_EQ(config_error(doc), "path.segments[1].radius: expected a number");

  doc = to_json(default_scenario());
  doc["vehicle"]["v_max"] = -1.0;
  EXPECT_NE(config_error(doc).find("vehicle.v_max"), std::string::npos);

  doc = to_json(default_scenario());
  doc["path"].erase("segments");
  EXPECT_EQ(config_error(doc), "path.segments: missing required key");
}

TEST(Scenario, TimestepBounds) {
  for (double dt : {0.0, -0.01, 0.051, 1.0}) {
    json doc = to_json(default_scenario());
    doc["dt"] = dt;
    EXPECT_NE(config_error(doc).find("dt"), std::string::npos) << dt;
  }
  for (double dt : {0.05, 0.001}) {
    json doc = to_json(default_scenario());
    doc["dt"] = dt;
    EXPECT_NO_THROW(scenario_from_json(doc)) << dt;
  }
}

TEST(Scenario, GuidanceMustStayWeakerThanHand) {
  Scenario s = default_scenario();
  s.haptics.kp = s.haptics.hand_stiffness;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Scenario, OverlappingGapsRejected) {
  json doc = to_json(default_scenario());
  doc["gaps"] = json::array({json::array({1.0, 2.0}), json::array({1.5, 2.5})});
  EXPECT_NE(config_error(doc).find("path"), std::string::npos);
}

TEST(Scenario, MalformedJsonReportsLineAndColumn) {
  const fs::path p = temp_file("cpf_bad_scenario.json", "{\n  \"dt\": 0.01,\n  \"mode\": ,\n}\n");
  try {
    load_scenario_file(p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(":3:"), std::string::npos) << what;
    EXPECT_NE(what.find("malformed JSON"), std::string::npos) << what;
  }
  fs::remove(p);
}

TEST(Scenario, CommentsAreAccepted) {
  const std::string text = "// leading note\n" + to_json(default_scenario()).dump(2);
  const fs::path p = temp_file("cpf_commented_scenario.json", text);
  EXPECT_EQ(scenario_hash(load_scenario_file(p)), scenario_hash(default_scenario()));
  fs::remove(p);
}

TEST(Scenario, MissingFileIsConfigError) {
  EXPECT_THROW(load_scenario_file("/nonexistent/cpf.json"), ConfigError);
}

TEST(ControlModeNames, RoundTrip) {
  EXPECT_EQ(to_string(ControlMode::kManual), "MC");
  EXPECT_EQ(to_string(ControlMode::kCooperative), "CC");
  EXPECT_EQ(control_mode_from_string("MC"), ControlMode::kManual);
  EXPECT_EQ(control_mode_from_string("CC"), ControlMode::kCooperative);
}

}  // namespace
}  // namespace cpf
