#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "support.hpp"

using namespace wardrobe;
using testing::json;

namespace {

json live_config() {
  return json{{"backends",
               {{"claude", {{"kind", "chat"}, {"endpoint", "http://127.0.0.1:1/v1"}, {"model", "claude-sonnet-4"},
                            {"api_key_env", "WARDROBE_TEST_UNSET_KEY"}}},
                {"qwen", {{"kind", "chat"}, {"endpoint", "http://127.0.0.1:1/v1"}, {"model", "qwen-vl-max"}}},
                {"search", {{"kind", "search"}, {"engine_id", "e"}, {"api_key_env", "WARDROBE_TEST_UNSET_KEY"}}},
                {"edit", {{"kind", "image_edit"}, {"endpoint", "http://127.0.0.1:1/edit"}}},
                {"scorer", {{"kind", "scorer"}, {"endpoint", "http://127.0.0.1:1"}}}}},
              {"designer", {{"experts", json::array({"claude", "qwen"})}, {"item_diagnoser", "qwen"}, {"search", "search"}}},
              {"consultant", {{"image_edit", "edit"}, {"diagnoser", "qwen"}}},
              {"critic", {{"describer", "qwen"}}},
              {"scorer", "scorer"}};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config: defaults validate and references are checked") {
    CHECK_NOTHROW(AppConfig::defaults().validate());
    auto c = AppConfig::from_json(live_config());
    CHECK(c.experts.experts.size() == 2);
    CHECK(c.experts.experts[0].weight == 0.5);
    CHECK(c.estimate.expert_models == std::vector<std::string>{"claude-sonnet-4", "qwen-vl-max"});
    CHECK(c.backend_models().at("qwen") == "qwen-vl-max");

    auto code_of = [](const json& j) {
      try {
        AppConfig::from_json(j);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::ScenarioError;
    };
    json inline_key = live_config();
    inline_key["backends"]["qwen"]["api_key"] = "sk-nope";
    CHECK(code_of(inline_key) == ErrorCode::ConfigError);
    json unknown = live_config();
    unknown["critic"]["describer"] = "ghost";
    CHECK(code_of(unknown) == ErrorCode::ConfigError);
    json wrong_kind = live_config();
    wrong_kind["scorer"] = "qwen";
    CHECK(code_of(wrong_kind) == ErrorCode::ConfigError);
    json bad_tau = live_config();
    bad_tau["designer"]["tau"] = {{"socks", 0.5}};
    CHECK(code_of(bad_tau) == ErrorCode::ConfigError);
    CHECK(code_of(json::array()) == ErrorCode::ConfigError);
  }

  TEST_CASE("missing credentials fail before any port call") {
    ::unsetenv("WARDROBE_TEST_UNSET_KEY");
    auto dir = testing::scratch_dir("live-missing-key");
    auto outcome = execute_pipeline(AppConfig::from_json(live_config()), testing::test_request(), dir, nullptr);
    CHECK(outcome.exit_code == kExitFatal);
    CHECK(outcome.report["status"] == "failed");
    CHECK(outcome.report["error"].get<std::string>().rfind("ConfigError", 0) == 0);
    CHECK(outcome.report["cost"]["actual"]["calls_by_port"].empty());
    CHECK(slurp(dir / "transcript.log").empty());
    CHECK(std::filesystem::exists(dir / "report.json"));
  }

  TEST_CASE("golden scenario: accepted, schema-valid, replayable") {
    auto a = testing::run_scenario("golden-run", testing::scratch_dir("golden-a"));
    auto b = testing::run_scenario("golden-run", testing::scratch_dir("golden-b"));
    CHECK(a.exit_code == kExitOk);
    CHECK(testing::check_report_schema(a.report) == "");
    CHECK(testing::stable_view(a.report) == testing::stable_view(b.report));
    CHECK(slurp(a.run_dir / "transcript.log") == slurp(b.run_dir / "transcript.log"));
    const auto& r = a.report;
    CHECK(r["mode"] == "scenario");
    CHECK(r["designer"]["accepted"] == true);
    CHECK(r["designer"]["garments"].size() == 3);
    CHECK(r["consultant"]["stages"][0]["category"] == "upper_body");
    CHECK(r["evaluation"]["face_similarity"].get<double>() == doctest::Approx(0.96));
    CHECK(r["evaluation"]["artist"]["overall"] == 8.5);
    for (const auto& [id, rel] : r["images"].items()) {
      INFO(id);
      CHECK(std::filesystem::exists(a.run_dir / rel.get<std::string>()));
    }
    CHECK(std::filesystem::exists(a.run_dir / r["consultant"]["final_image"].get<std::string>()));
    std::istringstream lines(slurp(a.run_dir / "transcript.log"));
    int n = 0;
    for (std::string line; std::getline(lines, line); ++n) CHECK(json::parse(line).contains("port"));
    int total = 0;
    for (const auto& [_, count] : r["cost"]["actual"]["calls_by_port"].items()) total += count.get<int>();
    CHECK(n == total);
  }

  TEST_CASE("seed changes synthesized images only") {
    auto a = testing::run_scenario("golden-run", testing::scratch_dir("seed-a"), 1);
    auto b = testing::run_scenario("golden-run", testing::scratch_dir("seed-b"), 2);
    CHECK(a.exit_code == b.exit_code);
    CHECK(a.report["designer"] == b.report["designer"]);
  }

  TEST_CASE("hidden face and fault injection still exit 0") {
    auto hidden = testing::run_scenario("hidden-face", testing::scratch_dir("hidden-face"));
    CHECK(hidden.exit_code == kExitOk);
    CHECK(hidden.report["evaluation"]["face_similarity"].is_null());
    CHECK(hidden.report["evaluation"]["notes"]["face_similarity"] == "no face found");
    CHECK(testing::check_report_schema(hidden.report) == "");

    auto faults = testing::run_scenario("fault-injection", testing::scratch_dir("fault-injection"));
    CHECK(faults.exit_code == kExitOk);
    for (const char* metric : {"style_consistency", "visual_quality", "face_similarity", "artist"}) {
      INFO(metric);
      CHECK(faults.report["evaluation"][metric].is_null());
      CHECK(faults.report["evaluation"]["notes"].contains(metric));
    }
    CHECK(testing::check_report_schema(faults.report) == "");
  }

  TEST_CASE("expert exhaustion is best effort") {
    auto r = testing::run_scenario("expert-exhaustion", testing::scratch_dir("exhaustion"));
    CHECK(r.exit_code == kExitBestEffort);
    CHECK(r.report["designer"]["accepted"] == false);
    CHECK(r.report["designer"]["expert_attempts"].size() == 4);
    CHECK(r.report["status"] == "completed");
    CHECK(testing::check_report_schema(r.report) == "");
  }

  TEST_CASE("exit code contract") {
    json ok{{"status", "completed"},
            {"designer", {{"accepted", true}}},
            {"consultant", {{"stages", json::array({{{"satisfied", true}}, {{"satisfied", true}}})}}}};
    CHECK(exit_code_for(ok) == kExitOk);
    json below = ok;
    below["consultant"]["stages"][1]["satisfied"] = false;
    CHECK(exit_code_for(below) == kExitBestEffort);
    json rejected = ok;
    rejected["designer"]["accepted"] = false;
    CHECK(exit_code_for(rejected) == kExitBestEffort);
    json failed = ok;
    failed["status"] = "failed";
    CHECK(exit_code_for(failed) == kExitFatal);
    json partial = ok;
    partial["consultant"] = nullptr;
    CHECK(exit_code_for(partial) == kExitBestEffort);
  }

  TEST_CASE("a fatal port error mid-run keeps the finished parts") {
    json scenario = testing::load_json(testing::scenario_path("golden-run"));
    scenario["replies"]["image_edit"]["tryon_edit"] = json::array({json{{"error", "Timeout"}}});
    auto mock = std::make_shared<MockBackend>(scenario, testing::source_dir() / "scenarios");
    auto scripted = mock->scripted_request();
    auto req = UserRequest::make("edit-timeout", scripted->first, scripted->second);
    auto out = execute_pipeline(AppConfig::defaults(), req, testing::scratch_dir("edit-timeout"), mock);
    CHECK(out.exit_code == kExitFatal);
    CHECK(out.report["designer"]["accepted"] == true);
    CHECK(out.report["consultant"].is_null());
    CHECK(out.report["error"].get<std::string>().rfind("Timeout", 0) == 0);
    CHECK(out.report["cost"]["actual"]["calls_by_port"]["image_edit"] == 1);
  }
}
