#include "wardrobe/mock_backend.hpp"

#include <algorithm>
#include <fstream>

namespace wardrobe {
namespace {

using nlohmann::json;

constexpr std::string_view kMockScheme = "mock://";

ErrorCode exhaustion_code(Port port) {
  switch (port) {
    case Port::vlm_chat: return ErrorCode::BackendUnavailable;
    case Port::search: return ErrorCode::NoResults;
    case Port::image_edit: return ErrorCode::GenerationFailed;
    default: return ErrorCode::ScorerUnavailable;
  }
}

void throw_if_error(const json& entry, Port port) {
  if (!entry.is_object() || !entry.contains("error")) return;
  auto name = entry["error"].is_string() ? entry["error"].get<std::string>() : std::string{};
  auto code = parse_error_code(name).value_or(exhaustion_code(port));
  throw Error(code, entry.value("message", "scripted failure"));
}

double as_number(const json& entry, Port port) {
  if (entry.is_number()) return entry.get<double>();
  if (entry.is_object() && entry.contains("value") && entry["value"].is_number()) return entry["value"].get<double>();
  fail(ErrorCode::ScenarioError, std::string(to_string(port)) + " entry must be a number: " + entry.dump());
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_image_ref_valid(const json& def) {
  if (!def.is_object()) return false;
  if (def.contains("path")) return def["path"].is_string();
  return def.contains("color") && def["color"].is_array() && def["color"].size() == 3;
}

}  // namespace

std::vector<std::string> match_keys(Port port, const std::string& backend_id, const CallContext& ctx) {
  std::vector<std::string> keys;
  auto with_subject = [&](const std::string& prefix) {
    if (!ctx.subject.empty()) keys.push_back(prefix + "/" + ctx.subject);
    keys.push_back(prefix);
  };
  if (port == Port::vlm_chat && !backend_id.empty()) {
    if (!ctx.purpose.empty()) with_subject(backend_id + "/" + ctx.purpose);
    keys.push_back(backend_id);
  }
  if (!ctx.purpose.empty()) with_subject(ctx.purpose);
  keys.push_back("*");
  return keys;
}

MockBackend::MockBackend(json scenario, std::filesystem::path base_dir, std::uint64_t seed)
    : scenario_(std::move(scenario)), base_dir_(std::move(base_dir)), seed_(seed) {
  if (!scenario_.is_object()) fail(ErrorCode::ScenarioError, "scenario must be a JSON object");
  auto problems = validate_scenario(scenario_, base_dir_);
  if (!problems.empty()) fail(ErrorCode::ScenarioError, problems.front());

  name_ = scenario_.value("name", std::string("scenario"));
  exhaustion_ = scenario_.value("exhaustion", std::string("repeat_last")) == "error" ? ExhaustionPolicy::error
                                                                                      : ExhaustionPolicy::repeat_last;
  if (scenario_.contains("synthetic_size")) {
    synthetic_width_ = scenario_["synthetic_size"].at(0).get<int>();
    synthetic_height_ = scenario_["synthetic_size"].at(1).get<int>();
  }
  const json images_section = scenario_.value("images", json::object());
  for (const auto& [name, def] : images_section.items()) {
    if (def.contains("path")) {
      images_[name] = image::load(base_dir_ / def["path"].get<std::string>(), name);
    } else {
      const auto& c = def["color"];
      images_[name] = image::solid(name, def.value("width", 64), def.value("height", 64),
                                   Rgb{c[0].get<std::uint8_t>(), c[1].get<std::uint8_t>(), c[2].get<std::uint8_t>()});
    }
  }
  const json latency_section = scenario_.value("latency", json::object());
  for (const auto& [port_name, seconds] : latency_section.items()) {
    latency_[*parse_port(port_name)] = seconds.get<double>();
  }
  const json replies_section = scenario_.value("replies", json::object());
  for (const auto& [port_name, by_key] : replies_section.items()) {
    Port port = *parse_port(port_name);
    for (const auto& [key, entries] : by_key.items()) {
      Queue q;
      if (entries.is_array()) {
        for (const auto& e : entries) q.entries.push_back(e);
      } else {
        q.entries.push_back(entries);
      }
      queues_[port][key] = std::move(q);
    }
  }
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ScenarioError, "cannot open scenario " + path.string());
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(ErrorCode::ScenarioError, "scenario is not valid JSON: " + path.string());
  return std::make_shared<MockBackend>(std::move(doc), path.parent_path(), seed);
}

Image MockBackend::image(const std::string& name) const {
  auto it = images_.find(name);
  if (it == images_.end()) fail(ErrorCode::ScenarioError, "scenario has no image '" + name + "'");
  return it->second;
}

std::optional<std::pair<Image, std::string>> MockBackend::scripted_request() const {
  if (!scenario_.contains("request")) return std::nullopt;
  const auto& r = scenario_["request"];
  return std::make_pair(image(r.at("image").get<std::string>()), r.at("preference").get<std::string>());
}

std::vector<MockBackend::Captured> MockBackend::captured() const {
  std::lock_guard lock(mutex_);
  return captured_;
}

std::vector<MockBackend::Captured> MockBackend::captured(Port port) const {
  std::vector<Captured> out;
  for (auto& c : captured()) {
    if (c.port == port) out.push_back(std::move(c));
  }
  return out;
}

json MockBackend::next(Port port, const std::vector<std::string>& keys, Captured capture) {
  std::lock_guard lock(mutex_);
  capture.port = port;
  auto port_it = queues_.find(port);
  Queue* queue = nullptr;
  if (port_it != queues_.end()) {
    for (const auto& key : keys) {
      auto it = port_it->second.find(key);
      if (it != port_it->second.end()) {
        queue = &it->second;
        capture.key = key;
        break;
      }
    }
  }
  captured_.push_back(capture);
  if (queue == nullptr || queue->entries.empty()) {
    throw Error(exhaustion_code(port), "no scripted " + std::string(to_string(port)) + " reply for key '" +
                                           keys.front() + "'");
  }
  if (queue->next >= queue->entries.size()) {
    if (exhaustion_ == ExhaustionPolicy::error) {
      throw Error(exhaustion_code(port), "scripted " + std::string(to_string(port)) + " replies for '" + capture.key +
                                             "' exhausted");
    }
    return queue->entries.back();
  }
  return queue->entries[queue->next++];
}

Usage MockBackend::usage(Port port) const {
  Usage u;
  auto it = latency_.find(port);
  u.seconds = it == latency_.end() ? 0.0 : it->second;
  return u;
}

Reply<std::string> MockBackend::chat(const ChatRequest& request) {
  Captured c;
  c.context = request.context;
  c.backend_id = request.backend_id;
  c.system_prompt = request.system_prompt;
  c.user_prompt = request.user_prompt;
  for (const auto& img : request.images) c.image_ids.push_back(img.id);
  json entry = next(Port::vlm_chat, match_keys(Port::vlm_chat, request.backend_id, request.context), std::move(c));
  throw_if_error(entry, Port::vlm_chat);
  Reply<std::string> reply{{}, usage(Port::vlm_chat)};
  if (entry.is_string()) {
    reply.value = entry.get<std::string>();
  } else if (entry.is_object() && entry.contains("text")) {
    reply.value = entry["text"].get<std::string>();
    if (entry.contains("tokens_in")) reply.usage.tokens_in = entry["tokens_in"].get<std::int64_t>();
    if (entry.contains("tokens_out")) reply.usage.tokens_out = entry["tokens_out"].get<std::int64_t>();
  } else {
    // Structured replies may be scripted as JSON directly.
    reply.value = entry.dump();
  }
  return reply;
}

Reply<std::vector<SearchHit>> MockBackend::search(const std::string& query, int num_results, const CallContext& ctx) {
  Captured c;
  c.context = ctx;
  c.query = query;
  c.n = num_results;
  json entry = next(Port::search, match_keys(Port::search, {}, ctx), std::move(c));
  throw_if_error(entry, Port::search);
  const json& hits = entry.is_object() && entry.contains("hits") ? entry["hits"] : entry;
  Reply<std::vector<SearchHit>> reply{{}, usage(Port::search)};
  for (const auto& h : hits) {
    reply.value.push_back(SearchHit{h.at("image_url").get<std::string>(), h.at("page_url").get<std::string>()});
  }
  return reply;
}

Image MockBackend::fetch(const std::string& url, const CallContext&) {
  const auto& downloads = scenario_.value("downloads", json::object());
  if (auto it = downloads.find(url); it != downloads.end()) {
    throw_if_error(*it, Port::search);
    return image(it->get<std::string>());
  }
  if (url.rfind(kMockScheme, 0) == 0) return image(url.substr(kMockScheme.size()));
  fail(ErrorCode::NoResults, "mock cannot download " + url);
}

Reply<std::vector<Image>> MockBackend::edit(const EditRequest& request) {
  Captured c;
  c.context = request.context;
  c.prompt = request.prompt;
  c.negative_terms = request.negative_terms;
  c.n = request.n;
  for (const auto& img : request.images) c.image_ids.push_back(img.id);
  json entry = next(Port::image_edit, match_keys(Port::image_edit, {}, request.context), std::move(c));
  throw_if_error(entry, Port::image_edit);
  Reply<std::vector<Image>> reply{{}, usage(Port::image_edit)};
  if (entry.is_string() && entry.get<std::string>() == "synthesize") {
    std::uint64_t call;
    {
      std::lock_guard lock(mutex_);
      call = ++synth_counter_;
    }
    for (int j = 0; j < request.n; ++j) {
      std::uint64_t h = mix(seed_ ^ mix(call * 131 + static_cast<std::uint64_t>(j)));
      Rgb color{static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
      reply.value.push_back(image::solid("edit-" + std::to_string(call) + "-" + std::to_string(j), synthetic_width_,
                                         synthetic_height_, color));
    }
    return reply;
  }
  if (!entry.is_array()) fail(ErrorCode::ScenarioError, "image_edit entry must be a list of image names");
  for (const auto& name : entry) reply.value.push_back(image(name.get<std::string>()));
  return reply;
}

Reply<double> MockBackend::vqa(const Image& image, const std::string& text, const CallContext& ctx) {
  Captured c;
  c.context = ctx;
  c.prompt = text;
  c.image_ids = {image.id};
  json entry = next(Port::vqa_score, match_keys(Port::vqa_score, {}, ctx), std::move(c));
  throw_if_error(entry, Port::vqa_score);
  return {as_number(entry, Port::vqa_score), usage(Port::vqa_score)};
}

Reply<double> MockBackend::clip_image(const Image& a, const Image& b, const CallContext& ctx) {
  Captured c;
  c.context = ctx;
  c.image_ids = {a.id, b.id};
  json entry = next(Port::clip_image_similarity, match_keys(Port::clip_image_similarity, {}, ctx), std::move(c));
  throw_if_error(entry, Port::clip_image_similarity);
  return {as_number(entry, Port::clip_image_similarity), usage(Port::clip_image_similarity)};
}

Reply<double> MockBackend::iqa(const Image& image, const CallContext& ctx) {
  Captured c;
  c.context = ctx;
  c.image_ids = {image.id};
  json entry = next(Port::iqa_score, match_keys(Port::iqa_score, {}, ctx), std::move(c));
  throw_if_error(entry, Port::iqa_score);
  return {as_number(entry, Port::iqa_score), usage(Port::iqa_score)};
}

Reply<std::vector<double>> MockBackend::face_embed(const Image& image, const CallContext& ctx) {
  Captured c;
  c.context = ctx;
  c.image_ids = {image.id};
  json entry = next(Port::face_embed, match_keys(Port::face_embed, {}, ctx), std::move(c));
  throw_if_error(entry, Port::face_embed);
  if (entry.is_string() && entry.get<std::string>() == "no_face") {
    fail(ErrorCode::NoFaceFound, "no face in " + image.id);
  }
  if (!entry.is_array()) fail(ErrorCode::ScenarioError, "face_embed entry must be a vector or \"no_face\"");
  return {entry.get<std::vector<double>>(), usage(Port::face_embed)};
}

Reply<Mask> MockBackend::mask(const Image& image, GarmentCategory category, const CallContext& ctx) {
  Captured c;
  c.context = ctx;
  c.image_ids = {image.id};
  c.prompt = std::string(to_string(category));
  json entry = next(Port::mask_region, match_keys(Port::mask_region, {}, ctx), std::move(c));
  throw_if_error(entry, Port::mask_region);
  Reply<Mask> reply{{}, usage(Port::mask_region)};
  if (entry.is_string() && entry.get<std::string>() == "full") {
    reply.value = Mask::full(image.width, image.height);
  } else if (entry.is_string() && entry.get<std::string>() == "not_found") {
    fail(ErrorCode::RegionNotFound, std::string(to_string(category)) + " not found in " + image.id);
  } else if (entry.is_object() && entry.contains("rect")) {
    auto r = entry["rect"].get<std::vector<int>>();
    reply.value = Mask::rect(image.width, image.height, r.at(0), r.at(1), r.at(2), r.at(3));
  } else if (entry.is_object() && entry.contains("rect_fraction")) {
    auto r = entry["rect_fraction"].get<std::vector<double>>();
    auto px = [](double f, int size) { return static_cast<int>(f * size + 0.5); };
    reply.value = Mask::rect(image.width, image.height, px(r.at(0), image.width), px(r.at(1), image.height),
                             px(r.at(2), image.width), px(r.at(3), image.height));
  } else {
    fail(ErrorCode::ScenarioError, "unrecognised mask entry " + entry.dump());
  }
  return reply;
}

std::vector<std::string> validate_scenario(const json& scenario, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  if (!scenario.is_object()) return {"scenario must be a JSON object"};

  static const std::vector<std::string> kKnown{"name",    "description", "exhaustion", "request",        "images",
                                               "latency", "replies",     "downloads",  "synthetic_size", "expect"};
  for (const auto& [key, _] : scenario.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) problems.push_back("unknown top-level key '" + key + "'");
  }
  if (scenario.contains("exhaustion")) {
    const auto& e = scenario["exhaustion"];
    if (!e.is_string() || (e != "repeat_last" && e != "error")) problems.push_back("exhaustion must be repeat_last or error");
  }

  std::vector<std::string> names;
  const json images = scenario.value("images", json::object());
  if (!images.is_object()) problems.push_back("images must be an object");
  for (const auto& [name, def] : images.items()) {
    names.push_back(name);
    if (!is_image_ref_valid(def)) {
      problems.push_back("image '" + name + "' needs a path or a color");
    } else if (def.contains("path") && !std::filesystem::exists(base_dir / def["path"].get<std::string>())) {
      problems.push_back("image '" + name + "' file not found: " + def["path"].get<std::string>());
    }
  }
  auto known_image = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
  auto check_url = [&](const std::string& url, const std::string& where) {
    if (url.rfind(kMockScheme, 0) == 0 && !known_image(url.substr(kMockScheme.size()))) {
      problems.push_back(where + ": unknown image in " + url);
    }
  };

  if (scenario.contains("request")) {
    const auto& r = scenario["request"];
    if (!r.is_object() || !r.contains("image") || !r.contains("preference")) {
      problems.push_back("request needs image and preference");
    } else if (!known_image(r["image"].get<std::string>())) {
      problems.push_back("request image '" + r["image"].get<std::string>() + "' is not defined");
    }
  }
  const json latency_section = scenario.value("latency", json::object());
  for (const auto& [port_name, seconds] : latency_section.items()) {
    if (!parse_port(port_name)) problems.push_back("latency for unknown port '" + port_name + "'");
    if (!seconds.is_number() || seconds.get<double>() < 0) problems.push_back("latency for '" + port_name + "' must be >= 0");
  }
  const json downloads_section = scenario.value("downloads", json::object());
  for (const auto& [url, target] : downloads_section.items()) {
    if (target.is_string() && !known_image(target.get<std::string>())) {
      problems.push_back("download " + url + " refers to unknown image");
    }
  }

  const json replies = scenario.value("replies", json::object());
  for (const auto& [port_name, by_key] : replies.items()) {
    auto port = parse_port(port_name);
    if (!port) {
      problems.push_back("replies for unknown port '" + port_name + "'");
      continue;
    }
    if (!by_key.is_object()) {
      problems.push_back("replies." + port_name + " must map match keys to reply lists");
      continue;
    }
    for (const auto& [key, entries] : by_key.items()) {
      std::string where = port_name + "[" + key + "]";
      // A list is a queue of replies; anything else is a single reply.
      json list = entries.is_array() ? entries : json::array({entries});
      for (const auto& entry : list) {
        if (entry.is_object() && entry.contains("error")) {
          if (!entry["error"].is_string() || !parse_error_code(entry["error"].get<std::string>())) {
            problems.push_back(where + ": unknown error code " + entry["error"].dump());
          }
          continue;
        }
        switch (*port) {
          case Port::vlm_chat:
            if (!entry.is_string() && !entry.is_object()) problems.push_back(where + ": reply must be text or object");
            break;
          case Port::search:
            if (!entry.is_array()) {
              problems.push_back(where + ": reply must be a list of hits");
              break;
            }
            for (const auto& hit : entry) {
              if (!hit.is_object() || !hit.contains("image_url") || !hit.contains("page_url")) {
                problems.push_back(where + ": hit needs image_url and page_url");
              } else {
                check_url(hit["image_url"].get<std::string>(), where);
              }
            }
            break;
          case Port::image_edit:
            if (entry.is_string() && entry == "synthesize") break;
            if (!entry.is_array()) {
              problems.push_back(where + ": reply must be a list of image names or \"synthesize\"");
              break;
            }
            for (const auto& n : entry) {
              if (!n.is_string() || !known_image(n.get<std::string>())) problems.push_back(where + ": unknown image " + n.dump());
            }
            break;
          case Port::vqa_score:
          case Port::iqa_score:
          case Port::clip_image_similarity:
            // {"value": x} passes x through unchecked so range faults can be injected.
            if (entry.is_object() && entry.contains("value") && entry["value"].is_number()) break;
            if (*port == Port::clip_image_similarity) {
              if (!entry.is_number() || entry.get<double>() < -1 || entry.get<double>() > 1) {
                problems.push_back(where + ": similarity must be a number in [-1,1]");
              }
              break;
            }
            if (!entry.is_number() || entry.get<double>() < 0 || entry.get<double>() > 1) {
              problems.push_back(where + ": score must be a number in [0,1]");
            }
            break;
          case Port::face_embed:
            if (!(entry.is_string() && entry == "no_face") && !entry.is_array()) {
              problems.push_back(where + ": reply must be a vector or \"no_face\"");
            }
            break;
          case Port::mask_region:
            if (!(entry.is_string() && (entry == "full" || entry == "not_found")) &&
                !(entry.is_object() && (entry.contains("rect") || entry.contains("rect_fraction")))) {
              problems.push_back(where + ": reply must be full, not_found, rect or rect_fraction");
            }
            break;
        }
      }
    }
  }
  return problems;
}

}  // namespace wardrobe
