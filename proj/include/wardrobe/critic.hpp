#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wardrobe/domain.hpp"
#include "wardrobe/ports.hpp"
#include "wardrobe/prompts.hpp"

namespace wardrobe {

struct CriticConfig {
  std::string describer;  // backend for the person description
  std::string artist;     // backend for the rubric; defaults to describer
};

// Inner text of the first <person description> block. Throws DescribeFailed.
std::string extract_person_description(std::string_view reply);

// Parses the rubric reply. Sub-scores must be integers in [1,10]; overall is
// recomputed as their mean and the model's own figure lands in comments.
// Throws ArtistParseFailed or SubScoreOutOfRange.
ArtistReport parse_artist_reply(std::string_view reply);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

class Critic {
 public:
  Critic(Ports& ports, CriticConfig config, const PromptRegistry& prompts = PromptRegistry::builtin());

  std::string describe_person(const Image& image);
  double style_consistency(const Image& final_image, const std::string& person_description,
                           const std::string& preference);
  double visual_quality(const Image& final_image);
  // nullopt when either image has no detectable face.
  std::optional<double> face_similarity(const Image& original, const Image& final_image);
  ArtistReport vlm_artist(const Image& final_image);

  // Never throws; a failing metric is left unset with a note.
  EvaluationReport evaluate(const UserRequest& request, const Image& final_image);

 private:
  Ports& ports_;
  CriticConfig config_;
  const PromptRegistry& prompts_;
};

}  // namespace wardrobe
