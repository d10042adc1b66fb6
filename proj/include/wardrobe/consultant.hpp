#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wardrobe/domain.hpp"
#include "wardrobe/feedback.hpp"
#include "wardrobe/ports.hpp"
#include "wardrobe/prompts.hpp"

namespace wardrobe {

CategoryThresholds default_tryon_thresholds();

struct ConsultantConfig {
  CategoryThresholds sigma = default_tryon_thresholds();
  int candidates_per_round = 3;
  int max_iterations = 3;
  std::string diagnoser;

  void validate() const;
};

// Largest region first: dress, upper_body, lower_body, shoes, scarf, hat,
// belt, glasses. Duplicates collapse.
std::vector<GarmentCategory> order_categories(const std::vector<GarmentCategory>& categories);

// "stage2-shoes-it1-c0"
std::string candidate_image_id(int stage, GarmentCategory category, int iteration, int index);

struct TryOnSelection {
  std::size_t index = 0;
  double masked_similarity = 0.0;
  // -1 where the region was not found.
  std::vector<double> similarities;
};

class Consultant {
 public:
  // Receives every generated candidate once it has its final id.
  using ImageSink = std::function<void(const Image&)>;

  Consultant(Ports& ports, ConsultantConfig config, const PromptRegistry& prompts = PromptRegistry::builtin());

  void set_image_sink(ImageSink sink) { sink_ = std::move(sink); }

  // The edit prompt for one garment, chosen by whether its product photo shows
  // a model.
  std::string tryon_prompt(const SelectedGarment& garment, Gender gender) const;

  // One image_edit call on [current | garment] asking for l candidates.
  std::vector<Image> generate_candidates(const Image& current, const SelectedGarment& garment, Gender gender,
                                         const NegativePromptSet& negatives, int stage, int iteration);

  // Masks each candidate to the garment's region, whitens the rest and
  // compares with the product photo. Argmax, lowest index on ties.
  TryOnSelection select_candidate(const std::vector<Image>& candidates, const Image& garment, GarmentCategory category);

  // Progressive composition: each stage dresses the previous stage's best
  // image in one more garment.
  TryOnState run(const Image& base, const OutfitProposal& outfit);

  const ConsultantConfig& config() const noexcept { return config_; }

 private:
  TryOnStage run_stage(int stage, const Image& input, const SelectedGarment& garment, Gender gender);

  Ports& ports_;
  ConsultantConfig config_;
  const PromptRegistry& prompts_;
  ImageSink sink_;
};

}  // namespace wardrobe
