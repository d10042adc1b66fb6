#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wardrobe/domain.hpp"
#include "wardrobe/feedback.hpp"
#include "wardrobe/ports.hpp"
#include "wardrobe/prompts.hpp"

namespace wardrobe {

struct Expert {
  std::string backend_id;
  double weight = 0.0;
};

// Capability-ranked experts. Weights only feed the cost model; control flow
// walks the pool strictly in order.
struct ExpertPool {
  std::vector<Expert> experts;

  void validate() const;
  // Four experts weighted 0.4, 0.3, 0.2, 0.1.
  static ExpertPool ranked(const std::vector<std::string>& backend_ids);
};

CategoryThresholds default_item_thresholds();

struct DesignerConfig {
  CategoryThresholds tau = default_item_thresholds();
  double omega = 0.65;
  int item_max_iterations = 3;
  std::string item_diagnoser;
  int search_num = 10;
  // One extra VLM call per selected garment to decide which try-on prompt fits.
  bool detect_garment_model = true;
  std::string model_check_backend;  // defaults to item_diagnoser
  bool allow_zero_score = false;

  void validate() const;
};

// Appends -"phrase" for each accumulated negative, in insertion order.
std::string build_search_query(const std::string& description, const NegativePromptSet& negatives);

// Clamped geometric mean (prod min(s_i / tau_i, 1))^(1/K). A zero score
// throws ZeroScore unless allow_zero, in which case the result is 0.
double score_outfit(const std::vector<double>& scores, const std::vector<double>& thresholds, bool allow_zero = false);

struct ExpertAttempt {
  int expert_index = 0;
  std::string backend_id;
  std::optional<GarmentSpecSheet> sheet;
  std::optional<double> outfit_score;
  bool accepted = false;
  std::string error;
};

struct DesignerResult {
  OutfitProposal proposal;
  std::vector<ExpertAttempt> attempts;
  // The proposal after the expert that produced it.
  std::vector<OutfitProposal> proposals;
};

void to_json(json& j, const ExpertAttempt& a);

class Designer {
 public:
  Designer(Ports& ports, DesignerConfig config, const PromptRegistry& prompts = PromptRegistry::builtin());

  // First expert gets the plain template; later experts also see every
  // previously rejected sheet.
  GarmentSpecSheet interpret_style(const UserRequest& request, const std::string& expert, int expert_index,
                                   const std::vector<GarmentSpecSheet>& rejected);

  // One item-level feedback loop: search, download, score each candidate
  // against the description, keep the best; diagnose and retry below tau.
  SelectedGarment acquire_garment(GarmentCategory category, const GarmentDescription& description);

  // Walks the expert pool until an outfit clears omega.
  DesignerResult run(const UserRequest& request, const ExpertPool& pool);

  const DesignerConfig& config() const noexcept { return config_; }

 private:
  std::optional<Attempt<GarmentCandidate>> search_round(GarmentCategory category, const std::string& description,
                                                        const NegativePromptSet& negatives,
                                                        std::vector<std::string>& queries);
  bool garment_shows_model(GarmentCategory category, const Image& garment);

  Ports& ports_;
  DesignerConfig config_;
  const PromptRegistry& prompts_;
};

}  // namespace wardrobe
