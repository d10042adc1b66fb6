#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wardrobe/errors.hpp"
#include "wardrobe/image.hpp"

namespace wardrobe {

using json = nlohmann::json;

enum class GarmentCategory { upper_body, lower_body, dress, shoes, hat, glasses, belt, scarf };

inline constexpr std::array<GarmentCategory, 8> kAllCategories = {
    GarmentCategory::upper_body, GarmentCategory::lower_body, GarmentCategory::dress,   GarmentCategory::shoes,
    GarmentCategory::hat,        GarmentCategory::glasses,    GarmentCategory::belt,    GarmentCategory::scarf};

// Canonical identifier, e.g. "upper_body".
std::string_view to_string(GarmentCategory c) noexcept;
// Name used inside interpreter replies, e.g. "upper body", "dresses".
std::string_view reply_name(GarmentCategory c) noexcept;
// Accepts canonical identifiers and reply names, case-insensitively.
std::optional<GarmentCategory> parse_category(std::string_view text);

enum class Gender { man, woman };
std::string_view to_string(Gender g) noexcept;
std::optional<Gender> parse_gender(std::string_view text);

/// Threshold table keyed by category.
using CategoryThresholds = std::map<GarmentCategory, double>;

struct UserRequest {
  std::string request_id;
  Image user_image;
  std::string preference_text;

  /// Validates: non-blank preference, image at least 64x64.
  static UserRequest make(std::string request_id, Image user_image, std::string preference_text);
};

struct GarmentDescription {
  std::string full_description;
  std::string short_description;
  friend bool operator==(const GarmentDescription&, const GarmentDescription&) = default;
};

struct GarmentSpecSheet {
  Gender gender = Gender::woman;
  std::vector<GarmentCategory> categories;
  std::map<GarmentCategory, GarmentDescription> entries;
  int expert_index = 1;

  const GarmentDescription& entry(GarmentCategory c) const;
  bool has(GarmentCategory c) const;

  // Equality ignores which expert produced the sheet.
  friend bool operator==(const GarmentSpecSheet& a, const GarmentSpecSheet& b) {
    return a.gender == b.gender && a.categories == b.categories && a.entries == b.entries;
  }
};

// Throws SchemaViolation or ConflictingCategories.
void validate(const GarmentSpecSheet& sheet);

// Pulls the first balanced JSON object out of a model reply, tolerating code
// fences and surrounding prose. Throws MalformedJson.
json extract_json_object(std::string_view reply);

/// Parses an interpreter reply into a validated sheet.
GarmentSpecSheet parse_spec_sheet(std::string_view reply, int expert_index = 1);

// The interpreter's own reply shape ({"category": [...], "prompts": {...}}).
// parse_spec_sheet(to_reply_json(s).dump()) == s for every valid sheet.
json to_reply_json(const GarmentSpecSheet& sheet);

struct PromptPair {
  std::string positive;
  std::string negative;
  friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

// Accumulated diagnoser feedback. Negative phrases are unique under case
// folding and hold at most three words.
class NegativePromptSet {
 public:
  static constexpr std::size_t kMaxWords = 3;

  // Returns false when the negative phrase is already present (or blank).
  bool insert(PromptPair pair);

  const std::vector<PromptPair>& pairs() const noexcept { return pairs_; }
  std::vector<std::string> negatives() const;
  bool contains(std::string_view negative) const;
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  friend bool operator==(const NegativePromptSet&, const NegativePromptSet&) = default;

 private:
  std::vector<PromptPair> pairs_;
};

// Collapses whitespace and keeps the first three words.
std::string normalize_phrase(std::string_view phrase);

// Parses a diagnoser reply. Accepts "positive prompt" / "positive_prompt"
// keys holding a string or a list of strings. Throws MalformedJson or
// SchemaViolation.
NegativePromptSet parse_prompt_pairs(std::string_view reply);

struct GarmentCandidate {
  Image image;
  std::string image_url;
  std::string source_link;
  std::optional<double> alignment_score;
  bool has_model = false;
};

struct SelectedGarment {
  GarmentCategory category = GarmentCategory::upper_body;
  GarmentCandidate candidate;
  std::string full_description;
  std::string short_description;
  double final_score = 0.0;
  int iterations_used = 1;
  NegativePromptSet negatives;
  bool satisfied = false;
  std::vector<std::string> queries;
  std::vector<double> round_scores;
};

struct OutfitProposal {
  GarmentSpecSheet spec;
  std::vector<SelectedGarment> garments;
  double outfit_score = 0.0;
  bool accepted = false;
};

struct TryOnRound {
  std::vector<std::string> candidate_ids;
  std::vector<double> similarities;
  std::optional<std::size_t> chosen;
  std::string error;
};

struct TryOnStage {
  GarmentCategory category = GarmentCategory::upper_body;
  Image input_image;
  std::string garment_image_id;
  Image chosen_image;
  double masked_similarity = 0.0;
  int regenerations = 0;
  bool satisfied = false;
  NegativePromptSet negatives;
  std::vector<TryOnRound> rounds;
};

struct TryOnState {
  std::vector<TryOnStage> stages;
  Image current_image;
};

struct ArtistReport {
  int design = 0;
  int fitness = 0;
  int coherence = 0;
  int mood = 0;
  double overall = 0.0;
  std::map<std::string, std::string> comments;
};

struct EvaluationReport {
  std::optional<double> style_consistency;
  std::optional<double> visual_quality;
  std::optional<double> face_similarity;
  std::optional<ArtistReport> artist;
  std::optional<std::string> person_description;
  std::map<std::string, std::string> notes;
};

// Returns an absolute URL with lower-cased scheme and host and no fragment.
// Throws InvalidUrl.
std::string validate_candidate_link(std::string_view url);

struct UrlParts {
  std::string scheme;
  std::string host;
  std::optional<int> port;
  std::string target;  // path + query, at least "/"

  std::string origin() const;
};
UrlParts split_url(std::string_view url);

// Canonical interchange JSON. Images appear by id; the run report maps ids to
// files.
void to_json(json& j, const GarmentSpecSheet& s);
void from_json(const json& j, GarmentSpecSheet& s);
void to_json(json& j, const PromptPair& p);
void to_json(json& j, const NegativePromptSet& n);
void to_json(json& j, const SelectedGarment& g);
void to_json(json& j, const OutfitProposal& o);
void to_json(json& j, const TryOnStage& s);
void to_json(json& j, const TryOnState& s);
void to_json(json& j, const ArtistReport& a);
void to_json(json& j, const EvaluationReport& e);

}  // namespace wardrobe
