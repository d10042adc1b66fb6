#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace wardrobe;
using testing::json;
using testing::make_scenario;
using testing::Rig;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ScenarioError;
}

const CallContext kCtx{Phase::designer, "probe", "shoes"};

}  // namespace

TEST_SUITE("ports") {
  TEST_CASE("match keys go from most to least specific") {
    CHECK(match_keys(Port::vlm_chat, "qwen", {Phase::critic, "artist", "x"}) ==
          std::vector<std::string>{"qwen/artist/x", "qwen/artist", "qwen", "artist/x", "artist", "*"});
    CHECK(match_keys(Port::search, "", {Phase::designer, "item_search", ""}) ==
          std::vector<std::string>{"item_search", "*"});
  }

  TEST_CASE("exactly one record per call, successful or not") {
    Rig rig(make_scenario({{"vlm_chat", {{"probe", json::array({"hello", {{"error", "Timeout"}}, "  "})}}},
                           {"vqa_score", {{"probe", json::array({0.5, json{{"value", 1.5}}})}}},
                           {"iqa_score", {{"*", json::array({json{{"error", "ScorerUnavailable"}}})}}}}));
    auto img = testing::test_image("g");
    CHECK(rig.ports.vlm_chat("claude", "sys", "user", {img}, kCtx) == "hello");
    CHECK(code_of([&] { rig.ports.vlm_chat("claude", "sys", "user", {}, kCtx); }) == ErrorCode::Timeout);
    CHECK(code_of([&] { rig.ports.vlm_chat("claude", "sys", "user", {}, kCtx); }) == ErrorCode::EmptyReply);
    CHECK(rig.ports.vqa_score(img, "text", kCtx) == 0.5);
    CHECK(code_of([&] { rig.ports.vqa_score(img, "text", kCtx); }) == ErrorCode::RangeViolation);
    CHECK(code_of([&] { rig.ports.iqa_score(img, kCtx); }) == ErrorCode::ScorerUnavailable);
    auto records = rig.telemetry.snapshot();
    REQUIRE(records.size() == 6);
    CHECK(records[0].ok);
    CHECK(records[0].images_in == 1);
    CHECK(records[0].backend_id == "claude");
    CHECK(records[0].phase == Phase::designer);
    CHECK(records[0].subject == "shoes");
    CHECK(records[0].tokens_in == estimate_tokens("sys") + estimate_tokens("user"));
    CHECK(records[1].error == "Timeout");
    CHECK(records[2].error == "EmptyReply");
    CHECK(records[4].error == "RangeViolation");
    CHECK_FALSE(records[5].ok);
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(records[i].seq == i + 1);
  }

  TEST_CASE("preconditions reject bad calls before any backend is reached") {
    Rig rig(make_scenario(json::object()));
    CHECK(code_of([&] { rig.ports.search("   ", 3, kCtx); }) == ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { rig.ports.search("q", 11, kCtx); }) == ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { rig.ports.image_edit({testing::test_image("a")}, "p", {}, 9, kCtx); }) ==
          ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { rig.ports.vlm_chat("nobody", "", "u", {}, kCtx); }) == ErrorCode::BackendUnavailable);
    CHECK(rig.mock->captured().empty());
  }

  TEST_CASE("search keeps only allow-listed sites and caps the count") {
    json hits = json::array({{{"image_url", "mock://a"}, {"page_url", "https://www.amazon.com/dp/a"}},
                             {{"image_url", "mock://b"}, {"page_url", "https://evil.example/b"}},
                             {{"image_url", "mock://c"}, {"page_url", "https://shop.etsy.com/c"}},
                             {{"image_url", "mock://d"}, {"page_url", "https://notamazon.com/d"}},
                             {{"image_url", "mock://e"}, {"page_url", "https://walmart.com/e"}}});
    json images = json::object();
    for (const char* n : {"a", "b", "c", "d", "e"}) images[n] = {{"color", {10, 20, 30}}};
    Rig rig(make_scenario({{"search", {{"*", json::array({hits})}}}}, images));
    auto kept = rig.ports.search("red shoes", 2, kCtx);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].image_url == "mock://a");
    CHECK(kept[1].image_url == "mock://c");
    CHECK(host_on_sites("https://m.taobao.com/x", {"taobao.com"}));
    CHECK_FALSE(host_on_sites("https://taobao.com.evil.io/x", {"taobao.com"}));
    CHECK(host_on_sites("https://anything.io", {}));
  }

  TEST_CASE("image edit must return exactly n images") {
    Rig rig(make_scenario({{"image_edit", {{"*", {json::array({"a"}), "synthesize"}}}}},
                          json{{"a", {{"color", {1, 2, 3}}, {"width", 8}, {"height", 8}}}}));
    auto in = testing::test_image("in");
    CHECK(code_of([&] { rig.ports.image_edit({in}, "p", {"blurry"}, 3, kCtx); }) == ErrorCode::GenerationFailed);
    auto out = rig.ports.image_edit({in}, "p", {"blurry"}, 3, kCtx);
    CHECK(out.size() == 3);
    auto records = rig.telemetry.snapshot();
    CHECK(records[0].images_out == 0);
    CHECK(records[1].images_out == 3);
    CHECK(rig.calls(Port::image_edit)[1].negative_terms == std::vector<std::string>{"blurry"});
  }

  TEST_CASE("masks: dimension check and empty region") {
    Rig rig(make_scenario({{"mask_region", {{"*", {"full", "not_found", json{{"rect", {0, 0, 1, 1}}}}}}}}));
    auto img = testing::test_image("c", 40, 40);
    auto m = rig.ports.mask_region(img, GarmentCategory::hat, kCtx);
    CHECK(m.width == 40);
    CHECK(m.coverage() == 1.0);
    CHECK(code_of([&] { rig.ports.mask_region(img, GarmentCategory::hat, kCtx); }) == ErrorCode::RegionNotFound);
    // 1 px of 1600 is below the default minimum coverage.
    CHECK(code_of([&] { rig.ports.mask_region(img, GarmentCategory::hat, kCtx); }) == ErrorCode::RegionNotFound);
  }

  TEST_CASE("face embedding: hidden face and zero vectors") {
    Rig rig(make_scenario({{"face_embed", {{"*", json::array({"no_face", json::array({0.0, 0.0})})}}}}));
    auto img = testing::test_image("f");
    CHECK(code_of([&] { rig.ports.face_embed(img, kCtx); }) == ErrorCode::NoFaceFound);
    CHECK(code_of([&] { rig.ports.face_embed(img, kCtx); }) == ErrorCode::RangeViolation);
  }

  TEST_CASE("mock queues: consumption order, repeat_last and error exhaustion") {
    json replies{{"vlm_chat", {{"qwen/artist", json::array({"one", "two"})}, {"artist", json::array({"generic"})}}}};
    Rig repeat(make_scenario(replies));
    CallContext ctx{Phase::critic, "artist", {}};
    CHECK(repeat.ports.vlm_chat("qwen", "", "u", {}, ctx) == "one");
    CHECK(repeat.ports.vlm_chat("qwen", "", "u", {}, ctx) == "two");
    CHECK(repeat.ports.vlm_chat("qwen", "", "u", {}, ctx) == "two");
    CHECK(repeat.ports.vlm_chat("claude", "", "u", {}, ctx) == "generic");
    CHECK(repeat.calls(Port::vlm_chat)[3].key == "artist");

    Rig strict(make_scenario(replies, json::object(), "error"));
    strict.ports.vlm_chat("qwen", "", "u", {}, ctx);
    strict.ports.vlm_chat("qwen", "", "u", {}, ctx);
    CHECK(code_of([&] { strict.ports.vlm_chat("qwen", "", "u", {}, ctx); }) == ErrorCode::BackendUnavailable);
    CHECK(code_of([&] { strict.ports.iqa_score(testing::test_image("i"), ctx); }) == ErrorCode::ScorerUnavailable);
  }

  TEST_CASE("synthesized edits depend on the seed only") {
    auto scenario = make_scenario({{"image_edit", {{"*", json::array({"synthesize"})}}}});
    auto run = [&](std::uint64_t seed) {
      Rig rig(scenario, {}, seed);
      return rig.ports.image_edit({testing::test_image("in")}, "p", {}, 2, kCtx);
    };
    CHECK(run(7) == run(7));
    CHECK_FALSE(run(7) == run(8));
  }

  TEST_CASE("simulated time records scripted latency or zero") {
    json scenario = make_scenario({{"vlm_chat", {{"*", json::array({"ok", {{"error", "Timeout"}}})}}}});
    scenario["latency"] = {{"vlm_chat", 12.5}};
    Rig rig(scenario);
    rig.ports.vlm_chat("qwen", "", "u", {}, kCtx);
    CHECK_THROWS(rig.ports.vlm_chat("qwen", "", "u", {}, kCtx));
    auto r = rig.telemetry.snapshot();
    CHECK(r[0].wall_time == 12.5);
    CHECK(r[1].wall_time == 0.0);
    std::ostringstream out;
    rig.telemetry.write_jsonl(out);
    const std::string lines = out.str();
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);
  }

  TEST_CASE("scenario validation reports problems") {
    json bad{{"name", "x"},
             {"exhaustion", "sometimes"},
             {"images", {{"a", {{"color", {1, 2}}}}}},
             {"replies", {{"teleport", {{"*", {1}}}}, {"face_embed", {{"*", {"hidden"}}}}}}};
    auto problems = validate_scenario(bad, testing::source_dir());
    CHECK(problems.size() >= 4);
    for (const char* name : {"golden-run", "hidden-face", "fault-injection", "expert-exhaustion"}) {
      INFO(name);
      auto path = testing::scenario_path(name);
      CHECK(validate_scenario(testing::load_json(path), path.parent_path()).empty());
    }
  }

  TEST_CASE("token estimate counts code points") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    CHECK(estimate_tokens("\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9") == 1);
  }
}
