#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "socsim/config.hpp"
#include "socsim/error.hpp"

using namespace socsim;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "socsim_config_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("hash ignores whitespace and comments") {
  const auto a = scratch("a.json", R"({"seed": 5, "channel": {"loss": 0.1}})");
  const auto b = scratch("b.json", "// team radio test\n{\n  \"seed\" : 5,\n  /* lossy */ \"channel\": {\n    \"loss\": 0.1\n  }\n}\n");
  CHECK(load_run_config(a).hash == load_run_config(b).hash);
}

TEST_CASE("hash follows the content") {
  const RunConfig a = make_run_config(json{{"seed", 5}});
  const RunConfig b = make_run_config(json{{"seed", 6}});
  CHECK(a.hash != b.hash);
  const RunConfig c = make_run_config(json{{"seed", 5}, {"log_path", "x.jsonl"}});
  CHECK(a.hash == c.hash);
  CHECK(a.hash.size() == 16);
}

TEST_CASE("defaults resolve to the declared values") {
  const RunConfig c = make_run_config(json::object());
  CHECK(c.duration == 60.0);
  CHECK(c.team_sizes == std::array<int, 2>{4, 4});
  CHECK(c.field.length == 12.0);
  CHECK(c.field.width == 8.0);
  CHECK(c.fusion.gate_threshold == 9.0);
  CHECK(c.behavior.installed().count("go"));
  CHECK(c.resolved.contains("behavior"));
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(make_run_config(json{{"sead", 1}}), ConfigError);
  CHECK_THROWS_AS(make_run_config(json{{"channel", {{"lost", 0.1}}}}), ConfigError);
}

TEST_CASE("invalid values are rejected") {
  CHECK_THROWS_AS(make_run_config(json{{"channel", {{"loss", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(make_run_config(json{{"fusion", {{"gate_threshold", -1}}}}), ConfigError);
  CHECK_THROWS_AS(make_run_config(json{{"dt", 0}}), ConfigError);
}

TEST_CASE("missing referenced files are reported") {
  CHECK_THROWS_AS(make_run_config(json{{"field", "no_such_field.json"}}), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
  const auto bad = scratch("bad.json", "{\"seed\": ");
  CHECK_THROWS_AS(load_run_config(bad), ConfigError);
}

TEST_CASE("field files are inlined relative to the config") {
  scratch("field.json", R"({"length": 10.0, "width": 6.0})");
  const auto cfg = scratch("with_field.json", R"({"field": "field.json"})");
  const RunConfig c = load_run_config(cfg);
  CHECK(c.field.length == 10.0);
  CHECK(c.field.width == 6.0);
}

TEST_CASE("dotted overrides") {
  json doc = json::object();
  set_dotted(doc, "channel.loss", "0.25");
  set_dotted(doc, "fusion.global_enabled", "false");
  set_dotted(doc, "log_path", "out.jsonl");
  CHECK(doc["channel"]["loss"] == 0.25);
  CHECK(doc["fusion"]["global_enabled"] == false);
  CHECK(doc["log_path"] == "out.jsonl");
  const RunConfig c = make_run_config(doc);
  CHECK(c.channel.loss == 0.25);
  CHECK_FALSE(c.fusion.global_enabled);
}

}  // TEST_SUITE
