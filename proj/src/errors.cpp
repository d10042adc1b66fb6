#include "wardrobe/errors.hpp"

namespace wardrobe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ConflictingCategories: return "ConflictingCategories";
    case ErrorCode::InvalidUrl: return "InvalidUrl";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::MissingArg: return "MissingArg";
    case ErrorCode::ExtraArg: return "ExtraArg";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::EmptyReply: return "EmptyReply";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::NoResults: return "NoResults";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::ContentRejected: return "ContentRejected";
    case ErrorCode::ScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::NoFaceFound: return "NoFaceFound";
    case ErrorCode::RegionNotFound: return "RegionNotFound";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::GeneratorFailed: return "GeneratorFailed";
    case ErrorCode::DiagnoserFailed: return "DiagnoserFailed";
    case ErrorCode::NoUsableResult: return "NoUsableResult";
    case ErrorCode::SpecParseFailed: return "SpecParseFailed";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::ZeroScore: return "ZeroScore";
    case ErrorCode::AllExpertsFailed: return "AllExpertsFailed";
    case ErrorCode::AllRegionsMissing: return "AllRegionsMissing";
    case ErrorCode::StageFailed: return "StageFailed";
    case ErrorCode::DescribeFailed: return "DescribeFailed";
    case ErrorCode::ArtistParseFailed: return "ArtistParseFailed";
    case ErrorCode::SubScoreOutOfRange: return "SubScoreOutOfRange";
    case ErrorCode::MissingPrice: return "MissingPrice";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ScenarioError: return "ScenarioError";
  }
  return "Unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::ScenarioError); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace wardrobe
