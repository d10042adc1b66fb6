#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wardrobe/ports.hpp"

namespace wardrobe {

enum class ExhaustionPolicy { repeat_last, error };

// A scenario file scripts every port's replies for an offline run.
//
//   {
//     "name": "golden-run",
//     "exhaustion": "repeat_last" | "error",
//     "request": {"image": "<image name>", "preference": "..."},      optional
//     "images": {"<name>": {"path": "rel/to/scenario.png"}
//                         | {"color": [r,g,b], "width": w, "height": h}},
//     "latency": {"<port>": seconds, ...},                             optional
//     "synthetic_size": [w, h],                                        optional
//     "replies": {"<port>": {"<match key>": [entry, entry, ...]}}
//   }
//
// A call looks up the first match key that exists, most specific first:
//   vlm_chat:  backend/purpose/subject, backend/purpose, backend,
//              purpose/subject, purpose, *
//   others:    purpose/subject, purpose, *
// Entries are consumed in call order. Any entry may be {"error": "<ErrorCode>"}.
// Per-port entry shapes:
//   vlm_chat     "text" | {"text": ..., "tokens_in": n, "tokens_out": n}
//   search       [{"image_url": ..., "page_url": ...}, ...]
//   image_edit   ["<image name>", ...] | "synthesize"
//   vqa_score, clip_image_similarity, iqa_score   number
//   face_embed   [numbers] | "no_face"
//   mask_region  "full" | "not_found" | {"rect": [x,y,w,h]} | {"rect_fraction": [x,y,w,h]}
// Search hits whose image_url is "mock://<image name>" download that image;
// "downloads": {"<url>": "<image name>" | {"error": ...}} covers the rest.
class MockBackend final : public VlmBackend, public SearchBackend, public ImageEditBackend, public ScorerBackend {
 public:
  struct Captured {
    Port port;
    std::string key;
    CallContext context;
    std::string backend_id;
    std::string system_prompt;
    std::string user_prompt;
    std::string query;
    std::string prompt;
    std::vector<std::string> image_ids;
    std::vector<std::string> negative_terms;
    int n = 0;
  };

  MockBackend(nlohmann::json scenario, std::filesystem::path base_dir, std::uint64_t seed = 0);
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path, std::uint64_t seed = 0);

  const std::string& name() const noexcept { return name_; }
  const nlohmann::json& scenario() const noexcept { return scenario_; }
  Image image(const std::string& name) const;
  std::optional<std::pair<Image, std::string>> scripted_request() const;

  std::vector<Captured> captured() const;
  std::vector<Captured> captured(Port port) const;

  Reply<std::string> chat(const ChatRequest& request) override;
  Reply<std::vector<SearchHit>> search(const std::string& query, int num_results, const CallContext& ctx) override;
  Image fetch(const std::string& url, const CallContext& ctx) override;
  Reply<std::vector<Image>> edit(const EditRequest& request) override;
  Reply<double> vqa(const Image& image, const std::string& text, const CallContext& ctx) override;
  Reply<double> clip_image(const Image& a, const Image& b, const CallContext& ctx) override;
  Reply<double> iqa(const Image& image, const CallContext& ctx) override;
  Reply<std::vector<double>> face_embed(const Image& image, const CallContext& ctx) override;
  Reply<Mask> mask(const Image& image, GarmentCategory category, const CallContext& ctx) override;

 private:
  struct Queue {
    std::vector<nlohmann::json> entries;
    std::size_t next = 0;
  };

  // Pops the next entry for the first matching key; records the capture.
  nlohmann::json next(Port port, const std::vector<std::string>& keys, Captured capture);
  Usage usage(Port port) const;

  std::string name_;
  nlohmann::json scenario_;
  std::filesystem::path base_dir_;
  std::uint64_t seed_;
  ExhaustionPolicy exhaustion_ = ExhaustionPolicy::repeat_last;
  std::map<std::string, Image> images_;
  std::map<Port, std::map<std::string, Queue>> queues_;
  std::map<Port, double> latency_;
  int synthetic_width_ = 96;
  int synthetic_height_ = 128;

  mutable std::mutex mutex_;
  std::vector<Captured> captured_;
  std::uint64_t synth_counter_ = 0;
};

std::vector<std::string> match_keys(Port port, const std::string& backend_id, const CallContext& ctx);

// Dry-checks a scenario document. Returns human-readable problems; empty
// means the scenario is usable.
std::vector<std::string> validate_scenario(const nlohmann::json& scenario, const std::filesystem::path& base_dir);

}  // namespace wardrobe
