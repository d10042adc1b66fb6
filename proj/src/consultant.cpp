#include "wardrobe/consultant.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>

namespace wardrobe {
namespace {

constexpr std::array<GarmentCategory, 8> kTryOnOrder = {
    GarmentCategory::dress, GarmentCategory::upper_body, GarmentCategory::lower_body, GarmentCategory::shoes,
    GarmentCategory::scarf, GarmentCategory::hat,        GarmentCategory::belt,       GarmentCategory::glasses};

std::string strip_trailing_period(std::string text) {
  while (!text.empty() && (text.back() == '.' || text.back() == ' ')) text.pop_back();
  return text;
}

struct StageValue {
  Image chosen;
  std::size_t index = 0;
};

}  // namespace

CategoryThresholds default_tryon_thresholds() {
  return {{GarmentCategory::upper_body, 0.7}, {GarmentCategory::lower_body, 0.7}, {GarmentCategory::dress, 0.7},
          {GarmentCategory::shoes, 0.5},      {GarmentCategory::hat, 0.5},        {GarmentCategory::glasses, 0.6},
          {GarmentCategory::belt, 0.6},       {GarmentCategory::scarf, 0.6}};
}

void ConsultantConfig::validate() const {
  for (auto c : kAllCategories) {
    auto it = sigma.find(c);
    require(it != sigma.end(), "sigma missing for " + std::string(to_string(c)));
    require(it->second > 0.0 && it->second <= 1.0, "sigma must be in (0,1]");
  }
  require(candidates_per_round >= 1 && candidates_per_round <= 8, "candidates_per_round must be in [1,8]");
  require(max_iterations >= 1, "try-on max iterations must be >= 1");
}

std::vector<GarmentCategory> order_categories(const std::vector<GarmentCategory>& categories) {
  require(!categories.empty(), "order_categories needs at least one category");
  std::vector<GarmentCategory> out;
  for (auto c : kTryOnOrder) {
    if (std::find(categories.begin(), categories.end(), c) != categories.end()) out.push_back(c);
  }
  return out;
}

std::string candidate_image_id(int stage, GarmentCategory category, int iteration, int index) {
  return "stage" + std::to_string(stage) + "-" + std::string(to_string(category)) + "-it" + std::to_string(iteration) +
         "-c" + std::to_string(index);
}

Consultant::Consultant(Ports& ports, ConsultantConfig config, const PromptRegistry& prompts)
    : ports_(ports), config_(std::move(config)), prompts_(prompts) {
  config_.validate();
}

std::string Consultant::tryon_prompt(const SelectedGarment& garment, Gender gender) const {
  auto id = garment.candidate.has_model ? prompt_ids::kTryOnWithModel : prompt_ids::kTryOnWithoutModel;
  return prompts_
      .render(id, {{"gender", std::string(to_string(gender))},
                   {"description", strip_trailing_period(garment.short_description)}})
      .text();
}

std::vector<Image> Consultant::generate_candidates(const Image& current, const SelectedGarment& garment, Gender gender,
                                                   const NegativePromptSet& negatives, int stage, int iteration) {
  const int l = config_.candidates_per_round;
  Image pair = image::concat_horizontal(current, garment.candidate.image,
                                        "stage" + std::to_string(stage) + "-it" + std::to_string(iteration) + "-input");
  auto images = ports_.image_edit({pair}, tryon_prompt(garment, gender), negatives.negatives(), l,
                                  {Phase::consultant, "tryon_edit", std::string(to_string(garment.category))});
  for (int j = 0; j < l; ++j) {
    images[j].id = candidate_image_id(stage, garment.category, iteration, j);
    if (sink_) sink_(images[j]);
  }
  return images;
}

TryOnSelection Consultant::select_candidate(const std::vector<Image>& candidates, const Image& garment,
                                            GarmentCategory category) {
  require(!candidates.empty(), "select_candidate needs at least one candidate");
  const std::string subject(to_string(category));
  TryOnSelection sel;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Mask mask;
    try {
      mask = ports_.mask_region(candidates[i], category, {Phase::consultant, "tryon_mask", subject});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RegionNotFound) throw;
      sel.similarities.push_back(-1.0);
      continue;
    }
    Image masked = image::composite_on_white(candidates[i], mask, candidates[i].id + "-masked");
    double sim = ports_.clip_image_similarity(masked, garment, {Phase::consultant, "tryon_score", subject});
    sel.similarities.push_back(sim);
    if (!best || sim > sel.similarities[*best]) best = i;
  }
  if (!best) fail(ErrorCode::AllRegionsMissing, subject + " region missing in all " + std::to_string(candidates.size()) +
                                                    " candidates");
  sel.index = *best;
  sel.masked_similarity = sel.similarities[*best];
  return sel;
}

TryOnStage Consultant::run_stage(int stage, const Image& input, const SelectedGarment& garment, Gender gender) {
  const std::string subject(to_string(garment.category));
  TryOnStage out;
  out.category = garment.category;
  out.input_image = input;
  out.garment_image_id = garment.candidate.image.id;

  LoopConfig loop{config_.sigma.at(garment.category), config_.max_iterations, config_.diagnoser};
  Generator<StageValue> generate = [&](const NegativePromptSet& negatives,
                                       int iteration) -> std::optional<Attempt<StageValue>> {
    TryOnRound round;
    std::vector<Image> candidates;
    try {
      candidates = generate_candidates(input, garment, gender, negatives, stage, iteration);
      for (const auto& c : candidates) round.candidate_ids.push_back(c.id);
      auto sel = select_candidate(candidates, garment.candidate.image, garment.category);
      round.similarities = sel.similarities;
      round.chosen = sel.index;
      out.rounds.push_back(std::move(round));
      return Attempt<StageValue>{{candidates[sel.index], sel.index}, sel.masked_similarity};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GenerationFailed && e.code() != ErrorCode::ContentRejected &&
          e.code() != ErrorCode::AllRegionsMissing) {
        throw;
      }
      spdlog::warn("try-on stage {} ({}) iteration {} unusable: {}", stage, subject, iteration, e.what());
      round.error = std::string(to_string(e.code()));
      if (e.code() == ErrorCode::AllRegionsMissing) round.similarities.assign(candidates.size(), -1.0);
      out.rounds.push_back(std::move(round));
      return std::nullopt;
    }
  };
  Diagnoser<StageValue> diagnose = [&](const StageValue& value) {
    auto prompt = prompts_.render(prompt_ids::kTryOnDiagnoser,
                                  {{std::string(prompt_args::kDescription), garment.short_description}});
    return parse_prompt_pairs(ports_.vlm_chat(config_.diagnoser, prompt.system, prompt.user,
                                              {value.chosen, garment.candidate.image},
                                              {Phase::consultant, "tryon_diagnose", subject}));
  };

  LoopOutcome<StageValue> outcome;
  try {
    outcome = run_feedback_loop(generate, diagnose, loop);
  } catch (const GeneratorFailed<StageValue>& e) {
    std::rethrow_exception(e.cause());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoUsableResult) throw;
    fail(ErrorCode::StageFailed, subject + ": no usable try-on image after " + std::to_string(loop.max_iterations) +
                                     " rounds");
  }
  out.chosen_image = outcome.best_value.chosen;
  out.masked_similarity = outcome.best_score;
  out.regenerations = outcome.iterations_used - 1;
  out.satisfied = outcome.satisfied;
  out.negatives = outcome.negatives;
  return out;
}

TryOnState Consultant::run(const Image& base, const OutfitProposal& outfit) {
  require(!outfit.garments.empty(), "outfit has no garments");
  std::vector<GarmentCategory> categories;
  for (const auto& g : outfit.garments) categories.push_back(g.category);
  TryOnState state;
  state.current_image = base;
  int stage = 0;
  for (auto category : order_categories(categories)) {
    auto it = std::find_if(outfit.garments.begin(), outfit.garments.end(),
                           [&](const SelectedGarment& g) { return g.category == category; });
    ++stage;
    state.stages.push_back(run_stage(stage, state.current_image, *it, outfit.spec.gender));
    state.current_image = state.stages.back().chosen_image;
    spdlog::info("try-on stage {} ({}) similarity {:.4f}{}", stage, to_string(category),
                 state.stages.back().masked_similarity, state.stages.back().satisfied ? "" : " (below sigma)");
  }
  return state;
}

}  // namespace wardrobe
