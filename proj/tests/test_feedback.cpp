#include <doctest.h>

#include <random>

#include "support.hpp"
#include "wardrobe/feedback.hpp"

using namespace wardrobe;

namespace {

struct Scripted {
  std::vector<std::optional<double>> scores;
  std::vector<NegativePromptSet> seen;
  int diagnosed = 0;

  Generator<int> generator() {
    return [this](const NegativePromptSet& negatives, int iteration) -> std::optional<Attempt<int>> {
      seen.push_back(negatives);
      const auto& s = scores.at(static_cast<std::size_t>(iteration - 1));
      if (!s) return std::nullopt;
      return Attempt<int>{iteration, *s};
    };
  }

  Diagnoser<int> diagnoser() {
    return [this](const int& iteration) {
      ++diagnosed;
      NegativePromptSet out;
      out.insert({"good " + std::to_string(iteration), "bad " + std::to_string(iteration)});
      out.insert({"shared", "always bad"});
      return out;
    };
  }
};

}  // namespace

TEST_SUITE("feedback") {
  TEST_CASE("stops at the first passing score and keeps the best") {
    Scripted s{{0.3, 0.5, 0.9, 0.95}};
    auto out = run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.8, 4, ""});
    CHECK(out.satisfied);
    CHECK(out.iterations_used == 3);
    CHECK(out.best_value == 3);
    CHECK(out.diagnoser_calls == 2);
    CHECK(out.negatives.negatives() == std::vector<std::string>{"bad 1", "always bad", "bad 2"});
  }

  TEST_CASE("best is kept over the last when nothing passes") {
    Scripted s{{0.6, 0.2, 0.4}};
    auto out = run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.8, 3, ""});
    CHECK_FALSE(out.satisfied);
    CHECK(out.best_value == 1);
    CHECK(out.best_score == 0.6);
    CHECK(out.diagnoser_calls == 2);
    CHECK(s.diagnosed == 2);
  }

  TEST_CASE("negatives only grow and reach the next iteration") {
    Scripted s{{0.1, 0.2, 0.3}};
    run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.9, 3, ""});
    REQUIRE(s.seen.size() == 3);
    CHECK(s.seen[0].empty());
    CHECK(s.seen[1].size() == 2);
    CHECK(s.seen[2].size() == 3);
    for (const auto& n : s.seen[1].negatives()) CHECK(s.seen[2].contains(n));
  }

  TEST_CASE("unusable rounds are not diagnosed and negatives carry over") {
    Scripted s{{std::nullopt, 0.4, std::nullopt}};
    auto out = run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.9, 3, ""});
    CHECK(out.diagnoser_calls == 1);
    CHECK(s.seen[2].size() == 2);
    CHECK_FALSE(out.scores[0].has_value());
    CHECK(out.best_value == 2);
  }

  TEST_CASE("no usable round at all") {
    Scripted s{{std::nullopt, std::nullopt}};
    try {
      run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.9, 2, ""});
      FAIL("expected NoUsableResult");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoUsableResult);
    }
  }

  TEST_CASE("a throwing diagnoser leaves the negatives unchanged") {
    Scripted s{{0.1, 0.2}};
    Diagnoser<int> broken = [](const int&) -> NegativePromptSet { throw Error(ErrorCode::MalformedJson, "junk"); };
    auto out = run_feedback_loop<int>(s.generator(), broken, {0.9, 2, ""});
    CHECK(out.diagnoser_failures == 1);
    CHECK(out.negatives.empty());
    CHECK(s.seen[1].empty());
  }

  TEST_CASE("a throwing generator reports its partial outcome") {
    int calls = 0;
    Generator<int> gen = [&](const NegativePromptSet&, int it) -> std::optional<Attempt<int>> {
      if (++calls == 2) throw Error(ErrorCode::Timeout, "slow");
      return Attempt<int>{it, 0.1};
    };
    Scripted s;
    try {
      run_feedback_loop<int>(gen, s.diagnoser(), {0.9, 3, ""});
      FAIL("expected GeneratorFailed");
    } catch (const GeneratorFailed<int>& e) {
      CHECK(e.iteration() == 2);
      CHECK(e.partial().best_score == 0.1);
      CHECK_THROWS_AS(std::rethrow_exception(e.cause()), Error);
    }
  }

  TEST_CASE("config is checked") {
    Scripted s{{0.5}};
    CHECK_THROWS_AS(run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.0, 1, ""}), Error);
    CHECK_THROWS_AS(run_feedback_loop<int>(s.generator(), s.diagnoser(), {0.5, 0, ""}), Error);
  }

  TEST_CASE("property: matches the step-through model on random sequences") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
      int max_it = 1 + static_cast<int>(rng() % 5);
      double thr = 0.05 + 0.9 * u(rng);
      std::vector<std::optional<double>> scores;
      for (int i = 0; i < max_it; ++i) scores.push_back(u(rng) < 0.15 ? std::nullopt : std::optional<double>(u(rng)));
      if (std::none_of(scores.begin(), scores.end(), [](auto& s) { return s.has_value(); })) scores[0] = 0.5;
      auto expected = testing::oracle_loop(scores, thr, max_it);
      Scripted s{scores};
      if (!expected.has_value) continue;
      auto out = run_feedback_loop<int>(s.generator(), s.diagnoser(), {thr, max_it, ""});
      CHECK(out.iterations_used == expected.iterations);
      CHECK(out.satisfied == expected.satisfied);
      CHECK(out.best_score == expected.best);
      CHECK(out.best_value == expected.best_iteration);
      CHECK(out.diagnoser_calls == expected.diagnoser_calls);
      CHECK(out.iterations_used <= max_it);
    }
  }

  TEST_CASE("merge keeps order and folds case") {
    NegativePromptSet a, b;
    a.insert({"x", "Too Long"});
    b.insert({"y", "too long"});
    b.insert({"z", "wrong hue"});
    auto m = merge_negatives(a, b);
    CHECK(m.negatives() == std::vector<std::string>{"Too Long", "wrong hue"});
  }
}
