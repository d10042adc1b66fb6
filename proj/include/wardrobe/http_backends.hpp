#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wardrobe/ports.hpp"

namespace wardrobe {

struct HttpSettings {
  std::string endpoint;  // scheme://host[:port][/base/path]
  std::string api_key;   // sent as a bearer token when non-empty
  int timeout_seconds = 120;
};

// OpenAI-compatible chat completions. Images travel as data URLs.
class ChatCompletionsBackend final : public VlmBackend {
 public:
  ChatCompletionsBackend(HttpSettings settings, std::string model);
  Reply<std::string> chat(const ChatRequest& request) override;

  // The JSON body sent for one request (exposed for tests).
  nlohmann::json build_body(const ChatRequest& request) const;

 private:
  HttpSettings settings_;
  std::string model_;
};

// Google Programmable Search, image mode. The site restriction is folded into
// the query.
class CustomSearchBackend final : public SearchBackend {
 public:
  CustomSearchBackend(HttpSettings settings, std::string engine_id, std::vector<std::string> sites);
  Reply<std::vector<SearchHit>> search(const std::string& query, int num_results, const CallContext& ctx) override;
  Image fetch(const std::string& url, const CallContext& ctx) override;

  // "(site:a OR site:b)" appended to the query; the query alone when no sites.
  std::string restricted_query(const std::string& query) const;

 private:
  HttpSettings settings_;
  std::string engine_id_;
  std::vector<std::string> sites_;
};

// Generic image edit endpoint:
//   POST {prompt, negative_prompt, images_b64: [...], num_images} -> {images_b64: [...]}
class HttpImageEditBackend final : public ImageEditBackend {
 public:
  explicit HttpImageEditBackend(HttpSettings settings);
  Reply<std::vector<Image>> edit(const EditRequest& request) override;

 private:
  HttpSettings settings_;
};

// Client for the scorer wire protocol:
//   POST /v1/vqa        {image_b64, text}           -> {score}
//   POST /v1/clip_ii    {image_a_b64, image_b_b64}  -> {score}
//   POST /v1/iqa        {image_b64}                 -> {score}
//   POST /v1/face_embed {image_b64}                 -> {vector} | 404 {error: "no_face"}
//   POST /v1/mask       {image_b64, category}       -> {mask_b64}
class HttpScorerBackend final : public ScorerBackend {
 public:
  explicit HttpScorerBackend(HttpSettings settings);
  Reply<double> vqa(const Image& image, const std::string& text, const CallContext& ctx) override;
  Reply<double> clip_image(const Image& a, const Image& b, const CallContext& ctx) override;
  Reply<double> iqa(const Image& image, const CallContext& ctx) override;
  Reply<std::vector<double>> face_embed(const Image& image, const CallContext& ctx) override;
  Reply<Mask> mask(const Image& image, GarmentCategory category, const CallContext& ctx) override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body, bool allow_no_face = false);
  double score(const std::string& path, const nlohmann::json& body);

  HttpSettings settings_;
};

}  // namespace wardrobe
