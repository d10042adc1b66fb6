#include "wardrobe/http_backends.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace wardrobe {
namespace {

using nlohmann::json;

struct Target {
  std::string origin;
  std::string path;
};

Target resolve(const std::string& endpoint, const std::string& suffix) {
  auto parts = split_url(endpoint);
  std::string base = parts.target;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {parts.origin(), base + suffix};
}

std::unique_ptr<httplib::Client> make_client(const std::string& origin, const HttpSettings& s) {
  auto cli = std::make_unique<httplib::Client>(origin);
  cli->set_connection_timeout(s.timeout_seconds);
  cli->set_read_timeout(s.timeout_seconds);
  cli->set_write_timeout(s.timeout_seconds);
  cli->set_follow_location(true);
  if (!s.api_key.empty()) cli->set_bearer_token_auth(s.api_key);
  return cli;
}

// Transport failures become `unavailable`, or Timeout when that is what happened.
void check_transport(const httplib::Result& res, const std::string& what, ErrorCode unavailable, bool timeouts_distinct) {
  if (res) return;
  auto err = res.error();
  if (timeouts_distinct && (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                            err == httplib::Error::Write)) {
    fail(ErrorCode::Timeout, what + ": " + httplib::to_string(err));
  }
  fail(unavailable, what + ": " + httplib::to_string(err));
}

void check_status(const httplib::Result& res, const std::string& what, ErrorCode otherwise) {
  if (res->status == 200) return;
  std::string body = res->body.substr(0, 200);
  if (res->status == 429) fail(ErrorCode::QuotaExceeded, what + ": HTTP 429 " + body);
  fail(otherwise, what + ": HTTP " + std::to_string(res->status) + " " + body);
}

json parse_body(const std::string& body, const std::string& what, ErrorCode code) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(code, what + ": response is not a JSON object");
  return j;
}

std::string mime_type(const Image& img) {
  const auto& b = img.bytes;
  if (b.size() >= 4 && b[0] == 0x89 && b[1] == 'P' && b[2] == 'N' && b[3] == 'G') return "image/png";
  if (b.size() >= 2 && b[0] == 0xFF && b[1] == 0xD8) return "image/jpeg";
  if (b.size() >= 4 && b[0] == 'R' && b[1] == 'I' && b[2] == 'F' && b[3] == 'F') return "image/webp";
  return "application/octet-stream";
}

}  // namespace

ChatCompletionsBackend::ChatCompletionsBackend(HttpSettings settings, std::string model)
    : settings_(std::move(settings)), model_(std::move(model)) {}

json ChatCompletionsBackend::build_body(const ChatRequest& request) const {
  json messages = json::array();
  if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  json content = json::array({{{"type", "text"}, {"text", request.user_prompt}}});
  for (const auto& img : request.images) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:" + mime_type(img) + ";base64," + base64_encode(img.bytes)}}}});
  }
  messages.push_back({{"role", "user"}, {"content", content}});
  return {{"model", model_}, {"messages", messages}};
}

Reply<std::string> ChatCompletionsBackend::chat(const ChatRequest& request) {
  auto target = resolve(settings_.endpoint, "/chat/completions");
  auto cli = make_client(target.origin, settings_);
  const std::string what = "chat " + request.backend_id;
  auto res = cli->Post(target.path, build_body(request).dump(), "application/json");
  check_transport(res, what, ErrorCode::BackendUnavailable, true);
  check_status(res, what, ErrorCode::BackendUnavailable);
  auto j = parse_body(res->body, what, ErrorCode::BackendUnavailable);
  Reply<std::string> reply;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) {
      reply.value = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& part : content) reply.value += part.value("text", "");
    }
  } catch (const json::exception&) {
    fail(ErrorCode::EmptyReply, what + ": no message content");
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    if (u.contains("prompt_tokens")) reply.usage.tokens_in = u["prompt_tokens"].get<std::int64_t>();
    if (u.contains("completion_tokens")) reply.usage.tokens_out = u["completion_tokens"].get<std::int64_t>();
  }
  return reply;
}

CustomSearchBackend::CustomSearchBackend(HttpSettings settings, std::string engine_id, std::vector<std::string> sites)
    : settings_(std::move(settings)), engine_id_(std::move(engine_id)), sites_(std::move(sites)) {
  if (settings_.endpoint.empty()) settings_.endpoint = "https://www.googleapis.com/customsearch/v1";
}

std::string CustomSearchBackend::restricted_query(const std::string& query) const {
  if (sites_.empty()) return query;
  std::string clause;
  for (const auto& site : sites_) clause += (clause.empty() ? "site:" : " OR site:") + site;
  return query + " (" + clause + ")";
}

Reply<std::vector<SearchHit>> CustomSearchBackend::search(const std::string& query, int num_results,
                                                          const CallContext&) {
  auto target = resolve(settings_.endpoint, "");
  HttpSettings s = settings_;
  s.api_key.clear();  // the key goes in the query string here
  auto cli = make_client(target.origin, s);
  httplib::Params params{{"key", settings_.api_key},
                         {"cx", engine_id_},
                         {"q", restricted_query(query)},
                         {"searchType", "image"},
                         {"num", std::to_string(num_results)}};
  auto res = cli->Get(target.path.empty() ? "/" : target.path, params, httplib::Headers{});
  check_transport(res, "search", ErrorCode::BackendUnavailable, true);
  if (res->status == 403 && res->body.find("uota") != std::string::npos) {
    fail(ErrorCode::QuotaExceeded, "search: " + res->body.substr(0, 200));
  }
  check_status(res, "search", ErrorCode::BackendUnavailable);
  auto j = parse_body(res->body, "search", ErrorCode::BackendUnavailable);
  Reply<std::vector<SearchHit>> reply;
  for (const auto& item : j.value("items", json::array())) {
    std::string link = item.value("link", "");
    std::string page = item.contains("image") ? item["image"].value("contextLink", "") : "";
    if (!link.empty()) reply.value.push_back({link, page.empty() ? link : page});
  }
  if (reply.value.empty()) fail(ErrorCode::NoResults, "search returned no items for: " + query);
  return reply;
}

Image CustomSearchBackend::fetch(const std::string& url, const CallContext&) {
  auto parts = split_url(url);
  HttpSettings s = settings_;
  s.api_key.clear();
  s.timeout_seconds = std::min(s.timeout_seconds, 30);
  auto cli = make_client(parts.origin(), s);
  auto res = cli->Get(parts.target);
  check_transport(res, "download " + url, ErrorCode::BackendUnavailable, true);
  check_status(res, "download " + url, ErrorCode::BackendUnavailable);
  std::vector<std::uint8_t> bytes(res->body.begin(), res->body.end());
  std::string id = "dl-" + image::fingerprint(bytes);
  return image::from_bytes(std::move(id), std::move(bytes));
}

HttpImageEditBackend::HttpImageEditBackend(HttpSettings settings) : settings_(std::move(settings)) {}

Reply<std::vector<Image>> HttpImageEditBackend::edit(const EditRequest& request) {
  auto target = resolve(settings_.endpoint, "");
  auto cli = make_client(target.origin, settings_);
  json images = json::array();
  for (const auto& img : request.images) images.push_back(base64_encode(img.bytes));
  std::string negative;
  for (const auto& t : request.negative_terms) negative += (negative.empty() ? "" : ", ") + t;
  json body{{"prompt", request.prompt}, {"negative_prompt", negative}, {"images_b64", images}, {"num_images", request.n}};
  auto res = cli->Post(target.path.empty() ? "/" : target.path, body.dump(), "application/json");
  check_transport(res, "image edit", ErrorCode::GenerationFailed, true);
  if (res->status == 400 || res->status == 422) {
    auto err = json::parse(res->body, nullptr, false);
    if (!err.is_discarded() && err.is_object() && err.value("error", "") == "content_rejected") {
      fail(ErrorCode::ContentRejected, "image edit: content rejected");
    }
  }
  check_status(res, "image edit", ErrorCode::GenerationFailed);
  auto j = parse_body(res->body, "image edit", ErrorCode::GenerationFailed);
  Reply<std::vector<Image>> reply;
  int index = 0;
  for (const auto& b64 : j.value("images_b64", json::array())) {
    try {
      reply.value.push_back(image::from_bytes("edit-" + std::to_string(index++), base64_decode(b64.get<std::string>())));
    } catch (const std::exception& e) {
      fail(ErrorCode::GenerationFailed, std::string("image edit returned an undecodable image: ") + e.what());
    }
  }
  return reply;
}

HttpScorerBackend::HttpScorerBackend(HttpSettings settings) : settings_(std::move(settings)) {}

json HttpScorerBackend::post(const std::string& path, const json& body, bool allow_no_face) {
  auto target = resolve(settings_.endpoint, path);
  auto cli = make_client(target.origin, settings_);
  auto res = cli->Post(target.path, body.dump(), "application/json");
  check_transport(res, "scorer " + path, ErrorCode::ScorerUnavailable, false);
  if (allow_no_face && res->status == 404) {
    auto err = json::parse(res->body, nullptr, false);
    if (!err.is_discarded() && err.is_object() && err.value("error", "") == "no_face") {
      fail(ErrorCode::NoFaceFound, "scorer found no face");
    }
  }
  check_status(res, "scorer " + path, ErrorCode::ScorerUnavailable);
  return parse_body(res->body, "scorer " + path, ErrorCode::ScorerUnavailable);
}

double HttpScorerBackend::score(const std::string& path, const json& body) {
  auto j = post(path, body);
  if (!j.contains("score") || !j["score"].is_number()) fail(ErrorCode::ScorerUnavailable, path + ": no numeric score");
  return j["score"].get<double>();
}

Reply<double> HttpScorerBackend::vqa(const Image& image, const std::string& text, const CallContext&) {
  return {score("/v1/vqa", {{"image_b64", base64_encode(image.bytes)}, {"text", text}}), {}};
}

Reply<double> HttpScorerBackend::clip_image(const Image& a, const Image& b, const CallContext&) {
  return {score("/v1/clip_ii", {{"image_a_b64", base64_encode(a.bytes)}, {"image_b_b64", base64_encode(b.bytes)}}), {}};
}

Reply<double> HttpScorerBackend::iqa(const Image& image, const CallContext&) {
  return {score("/v1/iqa", {{"image_b64", base64_encode(image.bytes)}}), {}};
}

Reply<std::vector<double>> HttpScorerBackend::face_embed(const Image& image, const CallContext&) {
  auto j = post("/v1/face_embed", {{"image_b64", base64_encode(image.bytes)}}, true);
  if (!j.contains("vector") || !j["vector"].is_array()) fail(ErrorCode::ScorerUnavailable, "face_embed: no vector");
  try {
    return {j["vector"].get<std::vector<double>>(), {}};
  } catch (const json::exception&) {
    fail(ErrorCode::ScorerUnavailable, "face_embed: vector is not numeric");
  }
}

Reply<Mask> HttpScorerBackend::mask(const Image& image, GarmentCategory category, const CallContext&) {
  auto j = post("/v1/mask", {{"image_b64", base64_encode(image.bytes)}, {"category", std::string(to_string(category))}});
  if (!j.contains("mask_b64") || !j["mask_b64"].is_string()) fail(ErrorCode::ScorerUnavailable, "mask: no mask_b64");
  try {
    return {image::decode_mask(base64_decode(j["mask_b64"].get<std::string>())), {}};
  } catch (const Error& e) {
    fail(ErrorCode::ScorerUnavailable, std::string("mask: ") + e.what());
  }
}

}  // namespace wardrobe
