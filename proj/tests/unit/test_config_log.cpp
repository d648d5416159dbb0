#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fic_teleop/config.hpp"
#include "fic_teleop/experiment_log.hpp"

using namespace fic_teleop;
using nlohmann::json;

TEST(Config, JsonRoundTrip) {
  for (const SimConfig& cfg : {default_config(), button_task_config("expert"), impulse_config(5)}) {
    const json j = to_json(cfg);
    const SimConfig back = config_from_json(j);
    EXPECT_EQ(to_json(back).dump(), j.dump());
  }
}

TEST(Config, RoundTripKeepsEventsAndRecordings) {
  SimConfig cfg = default_config();
  cfg.channel_events.push_back({120, Stream::kVirtualForce, ChannelConfig{0.5, 10.0, cfg.dt}});
  OperatorOutput cmd;
  cmd.gripper_held = true;
  cmd.pose_target = Eigen::Vector2d(0.4, 0.1);
  cfg.scenario.kind = ScriptKind::kRecorded;
  cfg.scenario.recorded.push_back({7, cmd});
  cfg.model.limits[0].upper = std::numeric_limits<double>::infinity();
  const SimConfig back = config_from_json(to_json(cfg));
  ASSERT_EQ(back.channel_events.size(), 1u);
  EXPECT_EQ(back.channel_events[0].tick, 120);
  EXPECT_EQ(back.channel_events[0].stream, Stream::kVirtualForce);
  EXPECT_EQ(back.channel_events[0].config, cfg.channel_events[0].config);
  ASSERT_EQ(back.scenario.recorded.size(), 1u);
  EXPECT_EQ(back.scenario.recorded[0].command, cmd);
  EXPECT_TRUE(std::isinf(back.model.limits[0].upper));
}

TEST(Config, PartialOverlay) {
  const SimConfig cfg = config_from_json(json::parse(R"({"controller": "ic", "duration": 3})"));
  EXPECT_EQ(cfg.controller, ControllerKind::kIc);
  EXPECT_EQ(cfg.duration, 3.0);
  EXPECT_EQ(cfg.dt, default_config().dt);
}

TEST(Config, RejectsInvalid) {
  EXPECT_THROW(config_from_json(json::parse(R"({"dt": -1})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"controller": "pid"})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"channels": {"f_fb": {"delay": -0.1}}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"replica": {"fic": [{"w_max": 1, "x_b": 1}]}})")),
               ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"scenario": {"kind": "dance"}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse("[1, 2]")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, OperatorOutputJson) {
  OperatorOutput o;
  o.master_err = Eigen::Vector2d(0.01, -0.02);
  o.master_held = true;
  o.pose_nudge = Eigen::Vector2d(0.0, 0.05);
  EXPECT_EQ(operator_output_from_json(to_json(o)), o);
  const auto clamped = operator_output_from_json(json::parse(R"({"master_err": [3, 4]})"));
  EXPECT_NEAR(clamped.master_err.norm(), kMasterWorkspaceRadius, 1e-15);
  EXPECT_THROW(operator_output_from_json(json::parse(R"({"master_err": [1]})")), ConfigError);
  EXPECT_THROW(operator_output_from_json(json::parse("3")), ConfigError);
}

TEST(ExperimentLog, CsvRoundTripIsExact) {
  ExperimentLog log({"t", "a,b", "c\"d"});
  log.set_meta("note", "hello");
  log.add_row({0.0, 0.1, -1e-300});
  log.add_row({1.0 / 3.0, std::numeric_limits<double>::infinity(), 12345678.9});
  const std::string text = to_csv(log);
  const ExperimentLog back = parse_csv(text);
  EXPECT_EQ(back.columns(), log.columns());
  ASSERT_EQ(back.rows(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(back.at(r, c), log.at(r, c));
  }
  EXPECT_EQ(back.meta("note"), "hello");
  EXPECT_EQ(to_csv(back), text);
}

TEST(ExperimentLog, Accessors) {
  ExperimentLog log({"t", "x"});
  log.add_row({0, 1});
  log.add_row({1, 2});
  log.add_row({2, 3});
  EXPECT_EQ(log.series("x"), (std::vector<double>{1, 2, 3}));
  EXPECT_THROW(log.series("y"), LogError);
  EXPECT_THROW(log.add_row({1}), LogError);
  log.keep_tail(2);
  EXPECT_EQ(log.series("t"), (std::vector<double>{1, 2}));
  EXPECT_THROW(parse_csv("t,x\n1\n"), LogError);
}

TEST(ExperimentLog, NumberFormat) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-2.5e-7), "-2.5e-07");
}
