#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace wardrobe {

namespace prompt_ids {
inline constexpr std::string_view kInterpreterFirst = "interpreter_first";
inline constexpr std::string_view kInterpreterRetry = "interpreter_retry";
inline constexpr std::string_view kSearchDiagnoser = "search_diagnoser";
inline constexpr std::string_view kTryOnWithModel = "tryon_garment_with_model";
inline constexpr std::string_view kTryOnWithoutModel = "tryon_garment_without_model";
inline constexpr std::string_view kTryOnDiagnoser = "tryon_diagnoser";
inline constexpr std::string_view kPersonDescriber = "person_describer";
inline constexpr std::string_view kArtistRubric = "artist_rubric";
inline constexpr std::string_view kGarmentHasModel = "garment_has_model";
inline constexpr std::string_view kDatasetGenerator = "dataset_generator";
}  // namespace prompt_ids

namespace prompt_args {
inline constexpr std::string_view kDescription = "user clothing description";
inline constexpr std::string_view kNegativeExamples = "negative examples";
}  // namespace prompt_args

using PromptArgs = std::map<std::string, std::string, std::less<>>;

// A template asset is plain UTF-8 text. A line reading exactly
// "=== user ===" separates the system part from the user part; without it
// the whole file is the user part. Placeholders are {{ name }}.
struct PromptTemplate {
  std::string id;
  std::string system;
  std::string user;
  std::vector<std::string> required_args;  // sorted, unique
};

struct RenderedPrompt {
  std::string system;
  std::string user;

  // system and user joined by a blank line (or just user when system is empty).
  std::string text() const;
};

PromptTemplate parse_template(std::string id, std::string_view asset_text);

class PromptRegistry {
 public:
  // Templates compiled into the binary from assets/prompts.
  static const PromptRegistry& builtin();
  // Every *.txt under `dir`, keyed by file stem.
  static PromptRegistry from_directory(const std::filesystem::path& dir);

  void add(PromptTemplate tmpl);
  const PromptTemplate& get(std::string_view id) const;
  std::vector<std::string> ids() const;

  // Throws UnknownTemplate, MissingArg, ExtraArg.
  RenderedPrompt render(std::string_view id, const PromptArgs& args) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// The raw asset bytes as embedded at build time, keyed by file name.
const std::map<std::string, std::string_view>& embedded_prompt_assets();

inline std::string render_prompt(std::string_view id, const PromptArgs& args) {
  return PromptRegistry::builtin().render(id, args).text();
}

}  // namespace wardrobe
