#include "wardrobe/feedback.hpp"

namespace wardrobe {

NegativePromptSet merge_negatives(const NegativePromptSet& existing, const NegativePromptSet& incoming) {
  NegativePromptSet merged = existing;
  for (const auto& pair : incoming.pairs()) merged.insert(pair);
  return merged;
}

}  // namespace wardrobe
