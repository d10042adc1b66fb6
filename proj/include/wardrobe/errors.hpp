#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wardrobe {

// Every failure the library surfaces carries one of these codes. Callers
// branch on the code; the message is for humans.
enum class ErrorCode {
  // domain-model
  MalformedJson,
  SchemaViolation,
  ConflictingCategories,
  InvalidUrl,
  InvalidImage,
  PreconditionViolation,
  // prompt-registry
  UnknownTemplate,
  MissingArg,
  ExtraArg,
  // backend-ports
  BackendUnavailable,
  Timeout,
  EmptyReply,
  QuotaExceeded,
  NoResults,
  GenerationFailed,
  ContentRejected,
  ScorerUnavailable,
  NoFaceFound,
  RegionNotFound,
  RangeViolation,
  // feedback-controller
  GeneratorFailed,
  DiagnoserFailed,
  NoUsableResult,
  // designer
  SpecParseFailed,
  NoCandidates,
  ZeroScore,
  AllExpertsFailed,
  // consultant
  AllRegionsMissing,
  StageFailed,
  // critic
  DescribeFailed,
  ArtistParseFailed,
  SubScoreOutOfRange,
  // cost-model / pipeline
  MissingPrice,
  ConfigError,
  ScenarioError,
};

std::string_view to_string(ErrorCode code) noexcept;
std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::PreconditionViolation, message);
}

}  // namespace wardrobe
