#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace wardrobe;
using testing::json;
using testing::make_scenario;
using testing::Rig;

namespace {

DesignerConfig config() {
  DesignerConfig c;
  c.item_diagnoser = "qwen";
  return c;
}

// One category, one hit per search round, scripted VQA scores.
json single_item_scenario(GarmentCategory cat, const json& scores, int hits_per_round = 1) {
  const std::string subject(to_string(cat));
  json replies{
      {"vlm_chat",
       {{"claude/interpret", json::array({testing::sheet_reply({GarmentCategory::dress})})},
        {"qwen/garment_model_check", json::array({"no"})},
        {"qwen/item_diagnose", json::array({testing::pairs_reply({"shiny fabric"}), testing::pairs_reply({"long sleeves"}),
                                            testing::pairs_reply({"shiny fabric", "bright red"})})}}},
      {"search", {{"item_search/" + subject, json::array({testing::hits_for("g", hits_per_round)})}}},
      {"vqa_score", {{"item_score/" + subject, scores}}}};
  return make_scenario(replies, testing::images_for("g", hits_per_round));
}

}  // namespace

TEST_SUITE("designer") {
  TEST_CASE("search query appends each negative as an exclusion") {
    NegativePromptSet n;
    n.insert({"matte", "shiny fabric"});
    n.insert({"short", "long sleeves"});
    CHECK(build_search_query("Women's, red, dress", n) == R"(Women's, red, dress -"shiny fabric" -"long sleeves")");
    CHECK(build_search_query("plain", {}) == "plain");
    CHECK_THROWS_AS(build_search_query("  ", {}), Error);
  }

  TEST_CASE("outfit score matches the direct-product oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> s(0.001, 1.0), t(0.05, 1.0);
    for (int i = 0; i < 200; ++i) {
      std::size_t k = 1 + rng() % 8;
      std::vector<double> scores, tau;
      for (std::size_t j = 0; j < k; ++j) {
        scores.push_back(s(rng));
        tau.push_back(t(rng));
      }
      double got = score_outfit(scores, tau);
      CHECK(got == doctest::Approx(testing::oracle_outfit_score(scores, tau)).epsilon(1e-12));
      CHECK(got <= 1.0);
      CHECK(got > 0.0);
    }
    CHECK(score_outfit({0.63, 0.56}, {0.7, 0.7}) == doctest::Approx(0.848528137423857).epsilon(1e-12));
    CHECK(score_outfit({0.9, 0.8}, {0.7, 0.6}) == 1.0);
  }

  TEST_CASE("outfit score edge cases") {
    try {
      score_outfit({0.5, 0.0}, {0.7, 0.7});
      FAIL("zero accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroScore);
    }
    CHECK(score_outfit({0.5, 0.0}, {0.7, 0.7}, true) == 0.0);
    CHECK_THROWS_AS(score_outfit({}, {}), Error);
    CHECK_THROWS_AS(score_outfit({0.5}, {0.7, 0.7}), Error);
    CHECK_THROWS_AS(score_outfit({1.2}, {0.7}), Error);
  }

  TEST_CASE("expert pool ranking") {
    auto pool = ExpertPool::ranked({"a", "b", "c", "d"});
    CHECK(pool.experts[0].weight == 0.4);
    CHECK(pool.experts[3].weight == 0.1);
    CHECK_NOTHROW(pool.validate());
    auto two = ExpertPool::ranked({"a", "b"});
    CHECK(two.experts[1].weight == 0.5);
    CHECK_THROWS_AS(ExpertPool{}.validate(), Error);
    CHECK_THROWS_AS((ExpertPool{{{"a", 0.5}}}.validate()), Error);
  }

  TEST_CASE("item loop: diagnoses below tau and stops on pass") {
    Rig rig(single_item_scenario(GarmentCategory::dress, json::array({0.55, 0.65, 0.72})));
    Designer d(rig.ports, config());
    auto g = d.acquire_garment(GarmentCategory::dress, {"Women's, red, silk dress", "red dress."});
    CHECK(g.satisfied);
    CHECK(g.iterations_used == 3);
    CHECK(g.final_score == 0.72);
    CHECK(g.round_scores == std::vector<double>{0.55, 0.65, 0.72});
    CHECK(rig.calls(Port::search).size() == 3);
    CHECK(rig.calls(Port::vlm_chat, "item_diagnose").size() == 2);
    REQUIRE(g.queries.size() == 3);
    CHECK(g.queries[0] == "Women's, red, silk dress");
    CHECK(g.queries[1] == R"(Women's, red, silk dress -"shiny fabric")");
    CHECK(g.queries[2] == R"(Women's, red, silk dress -"shiny fabric" -"long sleeves")");
    CHECK(rig.calls(Port::search)[2].query == g.queries[2]);
    CHECK(g.candidate.source_link == "https://www.amazon.com/dp/g-0");
  }

  TEST_CASE("item loop keeps the best round, not the last") {
    Rig rig(single_item_scenario(GarmentCategory::hat, json::array({0.3, 0.5, 0.2})));
    Designer d(rig.ports, config());
    auto g = d.acquire_garment(GarmentCategory::hat, {"a hat", "hat."});
    CHECK_FALSE(g.satisfied);
    CHECK(g.final_score == 0.5);
    CHECK(g.iterations_used == 3);
  }

  TEST_CASE("candidates: best VQA wins, duplicates and bad links skipped") {
    json hits = testing::hits_for("g", 3);
    hits.push_back(hits[1]);
    hits.push_back({{"image_url", "not a url"}, {"page_url", "https://www.amazon.com/x"}});
    json scenario = single_item_scenario(GarmentCategory::shoes, json::array({0.4, 0.9, 0.5}), 3);
    scenario["replies"]["search"]["item_search/shoes"] = json::array({hits});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    auto g = d.acquire_garment(GarmentCategory::shoes, {"loafers", "loafers."});
    CHECK(rig.calls(Port::vqa_score).size() == 3);
    CHECK(g.candidate.image.id == "g-1");
    CHECK(g.final_score == 0.9);
  }

  TEST_CASE("empty and failing searches") {
    json scenario = single_item_scenario(GarmentCategory::belt, json::array({0.8}));
    scenario["replies"]["search"]["item_search/belt"] =
        json::array({json{{"error", "NoResults"}}, testing::hits_for("g", 1)});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    auto g = d.acquire_garment(GarmentCategory::belt, {"belt", "belt."});
    CHECK(g.round_scores == std::vector<double>{-1.0, 0.8});
    CHECK(rig.calls(Port::vlm_chat, "item_diagnose").empty());

    json none = single_item_scenario(GarmentCategory::belt, json::array({0.8}));
    none["replies"]["search"]["item_search/belt"] = json::array({json{{"error", "NoResults"}}});
    Rig rig2(none);
    Designer d2(rig2.ports, config());
    try {
      d2.acquire_garment(GarmentCategory::belt, {"belt", "belt."});
      FAIL("expected NoCandidates");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoCandidates);
    }

    json quota = single_item_scenario(GarmentCategory::belt, json::array({0.8}));
    quota["replies"]["search"]["item_search/belt"] = json::array({json{{"error", "QuotaExceeded"}}});
    Rig rig3(quota);
    Designer d3(rig3.ports, config());
    CHECK_THROWS_WITH_AS(d3.acquire_garment(GarmentCategory::belt, {"belt", "belt."}),
                         doctest::Contains("QuotaExceeded"), Error);
  }

  TEST_CASE("model check decides the try-on template") {
    json scenario = single_item_scenario(GarmentCategory::dress, json::array({0.9}));
    scenario["replies"]["vlm_chat"]["qwen/garment_model_check"] = json::array({"Yes, a model wears it."});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    CHECK(d.acquire_garment(GarmentCategory::dress, {"dress", "dress."}).candidate.has_model);
    auto off = config();
    off.detect_garment_model = false;
    Designer quiet(rig.ports, off);
    CHECK_FALSE(quiet.acquire_garment(GarmentCategory::dress, {"dress", "dress."}).candidate.has_model);
    CHECK(rig.calls(Port::vlm_chat, "garment_model_check").size() == 1);
  }

  TEST_CASE("interpretation: one re-ask on prose, none on schema errors") {
    json scenario = single_item_scenario(GarmentCategory::dress, json::array({0.9}));
    scenario["replies"]["vlm_chat"]["claude/interpret"] =
        json::array({"I think a dress would be lovely.", testing::sheet_reply({GarmentCategory::dress})});
    scenario["replies"]["vlm_chat"]["gemini/interpret"] = json::array({testing::sheet_reply({GarmentCategory::hat})});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    auto req = testing::test_request();
    auto sheet = d.interpret_style(req, "claude", 1, {});
    CHECK(sheet.categories == std::vector<GarmentCategory>{GarmentCategory::dress});
    CHECK(rig.calls(Port::vlm_chat, "interpret").size() == 2);
    try {
      d.interpret_style(req, "gemini", 2, {});
      FAIL("expected SpecParseFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SpecParseFailed);
    }
    CHECK(rig.calls(Port::vlm_chat, "interpret").size() == 3);
    auto first = rig.calls(Port::vlm_chat, "interpret")[0];
    CHECK(first.user_prompt.find(req.preference_text) != std::string::npos);
    CHECK(first.image_ids == std::vector<std::string>{"user"});
  }

  TEST_CASE("escalation hands rejected sheets to the next expert") {
    json scenario = single_item_scenario(GarmentCategory::dress, json::array({0.42, 0.42, 0.42, 0.49}));
    auto sheet2 = testing::sheet_reply({GarmentCategory::dress}, "woman");
    scenario["replies"]["vlm_chat"]["gemini/interpret"] = json::array({sheet2});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    auto result = d.run(testing::test_request(), ExpertPool::ranked({"claude", "gemini", "llama", "qwen"}));
    REQUIRE(result.attempts.size() == 2);
    CHECK(result.attempts[0].outfit_score.value() == doctest::Approx(0.6));
    CHECK_FALSE(result.attempts[0].accepted);
    CHECK(result.attempts[1].outfit_score.value() == doctest::Approx(0.7));
    CHECK(result.proposal.accepted);
    CHECK(result.proposal.spec.expert_index == 2);
    auto interprets = rig.calls(Port::vlm_chat, "interpret");
    REQUIRE(interprets.size() == 2);
    auto rejected = to_reply_json(parse_spec_sheet(testing::sheet_reply({GarmentCategory::dress}))).dump();
    CHECK(interprets[0].user_prompt.find(rejected) == std::string::npos);
    CHECK(interprets[1].user_prompt.find(rejected) != std::string::npos);
  }

  TEST_CASE("exhausted pool returns the best proposal, failures recorded") {
    json scenario = single_item_scenario(GarmentCategory::dress, json::array({0.3, 0.3, 0.3, 0.42}));
    scenario["replies"]["vlm_chat"]["gemini/interpret"] = json::array({"no json at all"});
    scenario["replies"]["vlm_chat"]["interpret"] = json::array({testing::sheet_reply({GarmentCategory::dress})});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    auto result = d.run(testing::test_request(), ExpertPool::ranked({"claude", "gemini", "llama", "qwen"}));
    CHECK(result.attempts.size() == 4);
    CHECK_FALSE(result.attempts[1].error.empty());
    CHECK_FALSE(result.proposal.accepted);
    CHECK(result.proposal.outfit_score == doctest::Approx(0.42 / 0.7));
    CHECK(result.proposal.spec.expert_index == 3);
  }

  TEST_CASE("every expert failing is fatal") {
    json scenario = single_item_scenario(GarmentCategory::dress, json::array({0.9}));
    scenario["replies"]["vlm_chat"]["claude/interpret"] = json::array({json{{"error", "Timeout"}}});
    scenario["replies"]["vlm_chat"]["interpret"] = json::array({"{}"});
    Rig rig(scenario);
    Designer d(rig.ports, config());
    try {
      d.run(testing::test_request(), ExpertPool::ranked({"claude", "gemini"}));
      FAIL("expected AllExpertsFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllExpertsFailed);
    }
  }
}
