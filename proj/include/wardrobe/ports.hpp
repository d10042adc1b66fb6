#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wardrobe/domain.hpp"
#include "wardrobe/image.hpp"
#include "wardrobe/telemetry.hpp"

namespace wardrobe {

// What a backend may report about the cost of one call. Unset fields fall
// back to estimates (tokens) or the measured duration (seconds).
struct Usage {
  std::optional<std::int64_t> tokens_in;
  std::optional<std::int64_t> tokens_out;
  std::optional<double> seconds;
};

template <class T>
struct Reply {
  T value;
  Usage usage;
};

struct ChatRequest {
  std::string backend_id;
  std::string system_prompt;
  std::string user_prompt;
  std::vector<Image> images;
  CallContext context;
};

struct SearchHit {
  std::string image_url;
  std::string page_url;
  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

struct EditRequest {
  std::vector<Image> images;
  std::string prompt;
  std::vector<std::string> negative_terms;
  int n = 1;
  CallContext context;
};

// Backend interfaces. Implementations do one attempt per call and never
// retry; retries belong to the feedback controller.
class VlmBackend {
 public:
  virtual ~VlmBackend() = default;
  virtual Reply<std::string> chat(const ChatRequest& request) = 0;
};

class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  virtual Reply<std::vector<SearchHit>> search(const std::string& query, int num_results, const CallContext& ctx) = 0;
  // Downloads an image found by search. Throws on any failure.
  virtual Image fetch(const std::string& url, const CallContext& ctx) = 0;
};

class ImageEditBackend {
 public:
  virtual ~ImageEditBackend() = default;
  virtual Reply<std::vector<Image>> edit(const EditRequest& request) = 0;
};

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual Reply<double> vqa(const Image& image, const std::string& text, const CallContext& ctx) = 0;
  virtual Reply<double> clip_image(const Image& a, const Image& b, const CallContext& ctx) = 0;
  virtual Reply<double> iqa(const Image& image, const CallContext& ctx) = 0;
  // Throws NoFaceFound when the face is hidden.
  virtual Reply<std::vector<double>> face_embed(const Image& image, const CallContext& ctx) = 0;
  virtual Reply<Mask> mask(const Image& image, GarmentCategory category, const CallContext& ctx) = 0;
};

struct PortOptions {
  // Result pages must live on one of these hosts (or a subdomain). Empty
  // disables the restriction.
  std::vector<std::string> sites{"amazon.com", "taobao.com", "walmart.com", "etsy.com"};
  double min_mask_coverage = 0.001;
  // Record 0 s instead of measured time when a backend reports no duration
  // (or fails). Scenario runs use this so transcripts replay byte for byte.
  bool simulated_time = false;
};

// The single entry point the pipeline uses for every external capability.
// Checks preconditions, enforces postconditions and appends exactly one
// PortCallRecord per call, successful or not.
class Ports {
 public:
  explicit Ports(Telemetry& telemetry, PortOptions options = {});

  void add_vlm(const std::string& backend_id, std::shared_ptr<VlmBackend> backend);
  void set_search(std::string backend_id, std::shared_ptr<SearchBackend> backend);
  void set_image_edit(std::string backend_id, std::shared_ptr<ImageEditBackend> backend);
  void set_scorer(std::string backend_id, std::shared_ptr<ScorerBackend> backend);

  bool has_vlm(const std::string& backend_id) const;

  std::string vlm_chat(const std::string& backend_id, const std::string& system_prompt, const std::string& user_prompt,
                       const std::vector<Image>& images, const CallContext& ctx);
  std::vector<SearchHit> search(const std::string& query, int num_results, const CallContext& ctx);
  // Not a port call: downloads are part of the search step and carry no
  // record of their own. Returns nullopt on failure.
  std::optional<Image> download(const std::string& url, const CallContext& ctx);
  std::vector<Image> image_edit(const std::vector<Image>& images, const std::string& prompt,
                                const std::vector<std::string>& negative_terms, int n, const CallContext& ctx);
  double vqa_score(const Image& image, const std::string& text, const CallContext& ctx);
  double clip_image_similarity(const Image& a, const Image& b, const CallContext& ctx);
  double iqa_score(const Image& image, const CallContext& ctx);
  std::vector<double> face_embed(const Image& image, const CallContext& ctx);
  Mask mask_region(const Image& image, GarmentCategory category, const CallContext& ctx);

  Telemetry& telemetry() noexcept { return telemetry_; }
  const PortOptions& options() const noexcept { return options_; }

 private:
  template <class T, class Fn>
  T record(Port port, const std::string& backend_id, const CallContext& ctx, std::int64_t tokens_in,
           std::int64_t images_in, ErrorCode fallback, Fn&& fn);

  Telemetry& telemetry_;
  PortOptions options_;
  std::map<std::string, std::shared_ptr<VlmBackend>> vlms_;
  std::string search_id_, edit_id_, scorer_id_;
  std::shared_ptr<SearchBackend> search_;
  std::shared_ptr<ImageEditBackend> edit_;
  std::shared_ptr<ScorerBackend> scorer_;
};

bool host_on_sites(const std::string& url, const std::vector<std::string>& sites);

}  // namespace wardrobe
