#pragma once

#include <spdlog/spdlog.h>

#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wardrobe/domain.hpp"
#include "wardrobe/errors.hpp"

namespace wardrobe {

struct LoopConfig {
  double threshold = 0.7;
  int max_iterations = 3;
  std::string diagnoser_backend;

  void validate() const {
    require(threshold > 0.0 && threshold <= 1.0, "loop threshold must be in (0,1]");
    require(max_iterations >= 1, "loop max_iterations must be >= 1");
  }
};

template <class T>
struct Attempt {
  T value;
  double score = 0.0;
};

template <class T>
struct LoopOutcome {
  T best_value{};
  double best_score = 0.0;
  int iterations_used = 0;
  bool satisfied = false;
  NegativePromptSet negatives;
  // Per-iteration history; nullopt marks a round that produced nothing.
  std::vector<std::optional<double>> scores;
  int diagnoser_calls = 0;
  int diagnoser_failures = 0;
  bool has_value = false;
};

// Raised when the generator throws. Carries what the loop had gathered so
// far so callers can still report it.
template <class T>
class GeneratorFailed : public Error {
 public:
  GeneratorFailed(int iteration, LoopOutcome<T> partial, std::exception_ptr cause, const std::string& what)
      : Error(ErrorCode::GeneratorFailed, "iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        partial_(std::move(partial)),
        cause_(std::move(cause)) {}

  int iteration() const noexcept { return iteration_; }
  const LoopOutcome<T>& partial() const noexcept { return partial_; }
  const std::exception_ptr& cause() const noexcept { return cause_; }

 private:
  int iteration_;
  LoopOutcome<T> partial_;
  std::exception_ptr cause_;
};

// Order-preserving union keyed on the case-folded negative phrase.
NegativePromptSet merge_negatives(const NegativePromptSet& existing, const NegativePromptSet& incoming);

// generate(negatives) produces one scored attempt, or nullopt for a round
// that yielded nothing usable (not diagnosed; negatives carry over).
template <class T>
using Generator = std::function<std::optional<Attempt<T>>(const NegativePromptSet& negatives, int iteration)>;
template <class T>
using Diagnoser = std::function<NegativePromptSet(const T& value)>;

// The threshold-gated negative-feedback loop shared by item, outfit and
// try-on levels:
//   iteration 1 runs with no negatives; after a failing iteration k < max the
//   diagnoser inspects iteration k's value and its phrases are merged into
//   the negatives for k+1. Stops at the first score >= threshold or after
//   max_iterations. The outcome holds the best attempt seen, not the last.
// A throwing diagnoser is logged and the loop carries on with unchanged
// negatives. A throwing generator aborts with GeneratorFailed<T>. If no
// round produced anything the loop throws NoUsableResult.
template <class T>
LoopOutcome<T> run_feedback_loop(const Generator<T>& generate, const Diagnoser<T>& diagnose, const LoopConfig& config) {
  config.validate();
  LoopOutcome<T> out;
  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    out.iterations_used = iteration;
    std::optional<Attempt<T>> attempt;
    try {
      attempt = generate(out.negatives, iteration);
    } catch (const std::exception& e) {
      out.scores.push_back(std::nullopt);
      throw GeneratorFailed<T>(iteration, std::move(out), std::current_exception(), e.what());
    }
    if (!attempt) {
      out.scores.push_back(std::nullopt);
      continue;
    }
    out.scores.push_back(attempt->score);
    if (!out.has_value || attempt->score > out.best_score) {
      out.best_value = attempt->value;
      out.best_score = attempt->score;
      out.has_value = true;
    }
    if (attempt->score >= config.threshold) {
      out.satisfied = true;
      return out;
    }
    if (iteration == config.max_iterations) break;
    ++out.diagnoser_calls;
    try {
      out.negatives = merge_negatives(out.negatives, diagnose(attempt->value));
    } catch (const std::exception& e) {
      ++out.diagnoser_failures;
      spdlog::warn("diagnoser failed on iteration {}: {}; keeping {} negatives", iteration, e.what(),
                   out.negatives.size());
    }
  }
  if (!out.has_value) {
    fail(ErrorCode::NoUsableResult, "no iteration produced a usable result in " + std::to_string(out.iterations_used) +
                                        " attempts");
  }
  return out;
}

}  // namespace wardrobe
