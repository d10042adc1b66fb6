#include "wardrobe/ports.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <type_traits>

namespace wardrobe {
namespace {

void check_unit_interval(double v, std::string_view what) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    fail(ErrorCode::RangeViolation, std::string(what) + " returned " + std::to_string(v) + ", outside [0,1]");
  }
}

}  // namespace

bool host_on_sites(const std::string& url, const std::vector<std::string>& sites) {
  if (sites.empty()) return true;
  std::string host;
  try {
    host = split_url(url).host;
  } catch (const Error&) {
    return false;
  }
  for (const auto& site : sites) {
    if (host == site) return true;
    if (host.size() > site.size() && host.compare(host.size() - site.size(), site.size(), site) == 0 &&
        host[host.size() - site.size() - 1] == '.') {
      return true;
    }
  }
  return false;
}

Ports::Ports(Telemetry& telemetry, PortOptions options) : telemetry_(telemetry), options_(std::move(options)) {}

void Ports::add_vlm(const std::string& backend_id, std::shared_ptr<VlmBackend> backend) {
  vlms_[backend_id] = std::move(backend);
}
void Ports::set_search(std::string backend_id, std::shared_ptr<SearchBackend> backend) {
  search_id_ = std::move(backend_id);
  search_ = std::move(backend);
}
void Ports::set_image_edit(std::string backend_id, std::shared_ptr<ImageEditBackend> backend) {
  edit_id_ = std::move(backend_id);
  edit_ = std::move(backend);
}
void Ports::set_scorer(std::string backend_id, std::shared_ptr<ScorerBackend> backend) {
  scorer_id_ = std::move(backend_id);
  scorer_ = std::move(backend);
}

bool Ports::has_vlm(const std::string& backend_id) const { return vlms_.count(backend_id) != 0; }

template <class T, class Fn>
T Ports::record(Port port, const std::string& backend_id, const CallContext& ctx, std::int64_t tokens_in,
                std::int64_t images_in, ErrorCode fallback, Fn&& fn) {
  PortCallRecord rec;
  rec.port = port;
  rec.phase = ctx.phase;
  rec.purpose = ctx.purpose;
  rec.subject = ctx.subject;
  rec.backend_id = backend_id;
  rec.tokens_in = tokens_in;
  rec.images_in = images_in;
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    if (options_.simulated_time) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    Reply<T> reply = fn();
    rec.tokens_in = reply.usage.tokens_in.value_or(tokens_in);
    rec.tokens_out = reply.usage.tokens_out.value_or(0);
    rec.wall_time = reply.usage.seconds.value_or(elapsed());
    if constexpr (std::is_same_v<T, std::vector<Image>>) rec.images_out = static_cast<std::int64_t>(reply.value.size());
    telemetry_.append(rec);
    return std::move(reply.value);
  } catch (const Error& e) {
    rec.ok = false;
    rec.error = std::string(to_string(e.code()));
    rec.wall_time = elapsed();
    telemetry_.append(rec);
    throw;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = std::string(to_string(fallback));
    rec.wall_time = elapsed();
    telemetry_.append(rec);
    throw Error(fallback, e.what());
  }
}

std::string Ports::vlm_chat(const std::string& backend_id, const std::string& system_prompt,
                            const std::string& user_prompt, const std::vector<Image>& images, const CallContext& ctx) {
  auto it = vlms_.find(backend_id);
  if (it == vlms_.end()) fail(ErrorCode::BackendUnavailable, "no VLM backend '" + backend_id + "'");
  auto backend = it->second;
  return record<std::string>(
      Port::vlm_chat, backend_id, ctx, estimate_tokens(system_prompt) + estimate_tokens(user_prompt),
      static_cast<std::int64_t>(images.size()), ErrorCode::BackendUnavailable, [&] {
        auto reply = backend->chat(ChatRequest{backend_id, system_prompt, user_prompt, images, ctx});
        if (reply.value.find_first_not_of(" \t\r\n") == std::string::npos) {
          fail(ErrorCode::EmptyReply, "backend '" + backend_id + "' returned an empty reply");
        }
        if (!reply.usage.tokens_out) reply.usage.tokens_out = estimate_tokens(reply.value);
        return reply;
      });
}

std::vector<SearchHit> Ports::search(const std::string& query, int num_results, const CallContext& ctx) {
  require(query.find_first_not_of(" \t\r\n") != std::string::npos, "search query is empty");
  require(num_results >= 1 && num_results <= 10, "num_results must be in [1,10]");
  if (!search_) fail(ErrorCode::BackendUnavailable, "no search backend configured");
  return record<std::vector<SearchHit>>(
      Port::search, search_id_, ctx, estimate_tokens(query), 0, ErrorCode::NoResults, [&] {
        auto reply = search_->search(query, num_results, ctx);
        std::vector<SearchHit> kept;
        for (auto& hit : reply.value) {
          if (!host_on_sites(hit.page_url, options_.sites)) {
            spdlog::debug("dropping off-site result {}", hit.page_url);
            continue;
          }
          if (static_cast<int>(kept.size()) < num_results) kept.push_back(std::move(hit));
        }
        reply.value = std::move(kept);
        return reply;
      });
}

std::optional<Image> Ports::download(const std::string& url, const CallContext& ctx) {
  if (!search_) return std::nullopt;
  try {
    Image img = search_->fetch(url, ctx);
    if (img.empty()) return std::nullopt;
    return img;
  } catch (const std::exception& e) {
    spdlog::info("download of {} failed: {}", url, e.what());
    return std::nullopt;
  }
}

std::vector<Image> Ports::image_edit(const std::vector<Image>& images, const std::string& prompt,
                                     const std::vector<std::string>& negative_terms, int n, const CallContext& ctx) {
  require(n >= 1 && n <= 8, "image_edit n must be in [1,8]");
  require(!images.empty(), "image_edit needs at least one input image");
  if (!edit_) fail(ErrorCode::BackendUnavailable, "no image edit backend configured");
  std::int64_t tokens = estimate_tokens(prompt);
  for (const auto& t : negative_terms) tokens += estimate_tokens(t);
  return record<std::vector<Image>>(
      Port::image_edit, edit_id_, ctx, tokens, static_cast<std::int64_t>(images.size()), ErrorCode::GenerationFailed,
      [&] {
        auto reply = edit_->edit(EditRequest{images, prompt, negative_terms, n, ctx});
        if (static_cast<int>(reply.value.size()) != n) {
          fail(ErrorCode::GenerationFailed,
               "requested " + std::to_string(n) + " images, got " + std::to_string(reply.value.size()));
        }
        return reply;
      });
}

double Ports::vqa_score(const Image& image, const std::string& text, const CallContext& ctx) {
  require(text.find_first_not_of(" \t\r\n") != std::string::npos, "vqa_score text is empty");
  if (!scorer_) fail(ErrorCode::ScorerUnavailable, "no scorer configured");
  return record<double>(Port::vqa_score, scorer_id_, ctx, estimate_tokens(text), 1, ErrorCode::ScorerUnavailable, [&] {
    auto reply = scorer_->vqa(image, text, ctx);
    check_unit_interval(reply.value, "vqa_score");
    return reply;
  });
}

double Ports::clip_image_similarity(const Image& a, const Image& b, const CallContext& ctx) {
  require(!a.empty() && !b.empty(), "clip_image_similarity needs two images");
  if (!scorer_) fail(ErrorCode::ScorerUnavailable, "no scorer configured");
  return record<double>(Port::clip_image_similarity, scorer_id_, ctx, 0, 2, ErrorCode::ScorerUnavailable, [&] {
    auto reply = scorer_->clip_image(a, b, ctx);
    if (!std::isfinite(reply.value) || reply.value < -1.0 || reply.value > 1.0) {
      fail(ErrorCode::RangeViolation, "clip similarity " + std::to_string(reply.value) + " outside [-1,1]");
    }
    return reply;
  });
}

double Ports::iqa_score(const Image& image, const CallContext& ctx) {
  require(!image.empty(), "iqa_score needs an image");
  if (!scorer_) fail(ErrorCode::ScorerUnavailable, "no scorer configured");
  return record<double>(Port::iqa_score, scorer_id_, ctx, 0, 1, ErrorCode::ScorerUnavailable, [&] {
    auto reply = scorer_->iqa(image, ctx);
    check_unit_interval(reply.value, "iqa_score");
    return reply;
  });
}

std::vector<double> Ports::face_embed(const Image& image, const CallContext& ctx) {
  require(!image.empty(), "face_embed needs an image");
  if (!scorer_) fail(ErrorCode::ScorerUnavailable, "no scorer configured");
  return record<std::vector<double>>(Port::face_embed, scorer_id_, ctx, 0, 1, ErrorCode::ScorerUnavailable, [&] {
    auto reply = scorer_->face_embed(image, ctx);
    double norm = 0.0;
    for (double v : reply.value) norm += v * v;
    norm = std::sqrt(norm);
    if (reply.value.empty() || !std::isfinite(norm) || norm == 0.0) {
      fail(ErrorCode::RangeViolation, "face embedding is empty or zero");
    }
    for (double& v : reply.value) v /= norm;
    return reply;
  });
}

Mask Ports::mask_region(const Image& image, GarmentCategory category, const CallContext& ctx) {
  require(!image.empty(), "mask_region needs an image");
  if (!scorer_) fail(ErrorCode::ScorerUnavailable, "no scorer configured");
  return record<Mask>(Port::mask_region, scorer_id_, ctx, 0, 1, ErrorCode::ScorerUnavailable, [&] {
    auto reply = scorer_->mask(image, category, ctx);
    if (reply.value.width != image.width || reply.value.height != image.height) {
      fail(ErrorCode::RangeViolation, "mask is " + std::to_string(reply.value.width) + "x" +
                                          std::to_string(reply.value.height) + ", image is " +
                                          std::to_string(image.width) + "x" + std::to_string(image.height));
    }
    if (reply.value.coverage() < options_.min_mask_coverage) {
      fail(ErrorCode::RegionNotFound, std::string(to_string(category)) + " region not found in " + image.id);
    }
    return reply;
  });
}

}  // namespace wardrobe
