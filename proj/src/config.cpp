#include "wardrobe/config.hpp"

#include <cstdlib>
#include <fstream>

#include "wardrobe/http_backends.hpp"

namespace wardrobe {
namespace {

using nlohmann::json;

BackendKind parse_kind(const std::string& id, const std::string& text) {
  if (text == "chat") return BackendKind::chat;
  if (text == "search") return BackendKind::search;
  if (text == "image_edit") return BackendKind::image_edit;
  if (text == "scorer") return BackendKind::scorer;
  fail(ErrorCode::ConfigError, "backend '" + id + "': unknown kind '" + text + "'");
}

std::string_view kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::chat: return "chat";
    case BackendKind::search: return "search";
    case BackendKind::image_edit: return "image_edit";
    case BackendKind::scorer: return "scorer";
  }
  return "?";
}

void read_thresholds(const json& j, CategoryThresholds& out, const char* what) {
  for (const auto& [name, value] : j.items()) {
    auto c = parse_category(name);
    if (!c) fail(ErrorCode::ConfigError, std::string(what) + ": unknown category '" + name + "'");
    out[*c] = value.get<double>();
  }
}

std::string read_env(const std::string& var, const std::string& backend) {
  const char* v = std::getenv(var.c_str());
  if (v == nullptr || *v == '\0') {
    fail(ErrorCode::ConfigError, "backend '" + backend + "': environment variable " + var + " is not set");
  }
  return v;
}

}  // namespace

void AppConfig::validate() const {
  auto need = [&](const std::string& id, BackendKind kind, const std::string& role) {
    if (id.empty()) fail(ErrorCode::ConfigError, role + ": no backend configured");
    auto it = backends.find(id);
    if (it == backends.end()) fail(ErrorCode::ConfigError, role + ": unknown backend '" + id + "'");
    if (it->second.kind != kind) {
      fail(ErrorCode::ConfigError, role + ": backend '" + id + "' is " + std::string(kind_name(it->second.kind)) +
                                       ", expected " + std::string(kind_name(kind)));
    }
  };
  try {
    experts.validate();
    designer.validate();
    consultant.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  for (const auto& e : experts.experts) need(e.backend_id, BackendKind::chat, "designer.experts");
  need(designer.item_diagnoser, BackendKind::chat, "designer.item_diagnoser");
  if (designer.detect_garment_model && !designer.model_check_backend.empty()) {
    need(designer.model_check_backend, BackendKind::chat, "designer.model_check");
  }
  need(search_backend, BackendKind::search, "designer.search");
  need(edit_backend, BackendKind::image_edit, "consultant.image_edit");
  need(consultant.diagnoser, BackendKind::chat, "consultant.diagnoser");
  need(critic.describer, BackendKind::chat, "critic.describer");
  if (!critic.artist.empty()) need(critic.artist, BackendKind::chat, "critic.artist");
  need(scorer_backend, BackendKind::scorer, "scorer");
}

std::map<std::string, std::string> AppConfig::backend_models() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, spec] : backends) {
    if (spec.kind == BackendKind::chat && !spec.model.empty()) out[id] = spec.model;
  }
  return out;
}

AppConfig AppConfig::defaults() {
  AppConfig c;
  auto chat = [&](const std::string& id, const std::string& model) {
    c.backends[id] = BackendSpec{id, BackendKind::chat, "", model, "", "", 120};
  };
  chat("claude", "claude-sonnet-4");
  chat("gemini", "gemini-2.5-pro");
  chat("llama", "llama-4-maverick");
  chat("qwen", "qwen-vl-max");
  c.backends["search"] = BackendSpec{"search", BackendKind::search, "", "", "", "", 60};
  c.backends["edit"] = BackendSpec{"edit", BackendKind::image_edit, "", "", "", "", 600};
  c.backends["scorer"] = BackendSpec{"scorer", BackendKind::scorer, "", "", "", "", 120};
  c.experts = ExpertPool::ranked({"claude", "gemini", "llama", "qwen"});
  c.designer.item_diagnoser = "qwen";
  c.search_backend = "search";
  c.consultant.diagnoser = "qwen";
  c.edit_backend = "edit";
  c.critic.describer = "qwen";
  c.critic.artist = "qwen";
  c.scorer_backend = "scorer";
  c.pricing = Pricing::preset("paper-2025-08");
  c.estimate.pricing = c.pricing;
  return c;
}

AppConfig AppConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  AppConfig c = defaults();
  try {
    if (j.contains("backends")) {
      c.backends.clear();
      for (const auto& [id, b] : j["backends"].items()) {
        if (b.contains("api_key")) {
          fail(ErrorCode::ConfigError, "backend '" + id + "': credentials must come from api_key_env, not inline");
        }
        BackendSpec spec;
        spec.id = id;
        spec.kind = parse_kind(id, b.at("kind").get<std::string>());
        spec.endpoint = b.value("endpoint", "");
        spec.model = b.value("model", "");
        spec.api_key_env = b.value("api_key_env", "");
        spec.engine_id = b.value("engine_id", "");
        spec.timeout_seconds = b.value("timeout_seconds", spec.kind == BackendKind::image_edit ? 600 : 120);
        c.backends[id] = spec;
      }
    }
    if (j.contains("designer")) {
      const auto& d = j["designer"];
      if (d.contains("experts")) {
        std::vector<std::string> ids;
        std::vector<double> weights;
        for (const auto& e : d["experts"]) {
          if (e.is_string()) {
            ids.push_back(e.get<std::string>());
          } else {
            ids.push_back(e.at("backend").get<std::string>());
            if (e.contains("weight")) weights.push_back(e["weight"].get<double>());
          }
        }
        c.experts = ExpertPool::ranked(ids);
        if (!weights.empty()) {
          if (weights.size() != ids.size()) fail(ErrorCode::ConfigError, "designer.experts: weight on some experts only");
          for (std::size_t i = 0; i < ids.size(); ++i) c.experts.experts[i].weight = weights[i];
        }
      }
      c.designer.item_diagnoser = d.value("item_diagnoser", c.designer.item_diagnoser);
      c.designer.model_check_backend = d.value("model_check", c.designer.model_check_backend);
      c.search_backend = d.value("search", c.search_backend);
      c.designer.omega = d.value("omega", c.designer.omega);
      c.designer.item_max_iterations = d.value("max_iterations", c.designer.item_max_iterations);
      c.designer.search_num = d.value("search_num", c.designer.search_num);
      c.designer.detect_garment_model = d.value("detect_garment_model", c.designer.detect_garment_model);
      c.designer.allow_zero_score = d.value("allow_zero_score", c.designer.allow_zero_score);
      if (d.contains("tau")) read_thresholds(d["tau"], c.designer.tau, "designer.tau");
    }
    if (j.contains("consultant")) {
      const auto& k = j["consultant"];
      c.edit_backend = k.value("image_edit", c.edit_backend);
      c.consultant.diagnoser = k.value("diagnoser", c.consultant.diagnoser);
      c.consultant.candidates_per_round = k.value("candidates_per_round", c.consultant.candidates_per_round);
      c.consultant.max_iterations = k.value("max_iterations", c.consultant.max_iterations);
      if (k.contains("sigma")) read_thresholds(k["sigma"], c.consultant.sigma, "consultant.sigma");
    }
    if (j.contains("critic")) {
      c.critic.describer = j["critic"].value("describer", c.critic.describer);
      c.critic.artist = j["critic"].value("artist", c.critic.describer);
    }
    c.scorer_backend = j.value("scorer", c.scorer_backend);
    if (j.contains("sites")) c.sites = j["sites"].get<std::vector<std::string>>();
    if (j.contains("pricing")) {
      c.pricing = j["pricing"].is_string() ? Pricing::preset(j["pricing"].get<std::string>())
                                           : Pricing::from_json(j["pricing"]);
    }
    if (j.contains("run_root")) {
      std::filesystem::path root = j["run_root"].get<std::string>();
      c.run_root = root.is_relative() && !base_dir.empty() ? base_dir / root : root;
    }
    const json est = j.value("estimate", json::object());
    c.estimate.vlm_call_seconds = est.value("vlm_call_seconds", c.estimate.vlm_call_seconds);
    c.estimate.search_seconds = est.value("search_seconds", c.estimate.search_seconds);
    c.estimate.edit_seconds = est.value("edit_seconds", c.estimate.edit_seconds);
    c.estimate.expected_expert_calls = est.value("expected_expert_calls", c.estimate.expected_expert_calls);
    c.estimate.expected_extra_searches = est.value("expected_extra_searches", c.estimate.expected_extra_searches);
    c.estimate.expected_extra_tryons = est.value("expected_extra_tryons", c.estimate.expected_extra_tryons);
    c.estimate.garments = est.value("garments", c.estimate.garments);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("malformed config: ") + e.what());
  }

  // The estimator prices experts, diagnoser and critic by their models.
  auto model_of = [&](const std::string& id) {
    auto it = c.backends.find(id);
    return it == c.backends.end() || it->second.model.empty() ? id : it->second.model;
  };
  c.estimate.pricing = c.pricing;
  c.estimate.candidates_per_round = c.consultant.candidates_per_round;
  c.estimate.expert_models.clear();
  c.estimate.expert_weights.clear();
  for (const auto& e : c.experts.experts) {
    c.estimate.expert_models.push_back(model_of(e.backend_id));
    c.estimate.expert_weights.push_back(e.weight);
  }
  c.estimate.diagnoser_model = model_of(c.designer.item_diagnoser);
  c.estimate.critic_model = model_of(c.critic.describer);
  c.validate();
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot read config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, "config " + path.string() + " is not valid JSON");
  return from_json(j, path.parent_path());
}

void wire_ports(Ports& ports, const AppConfig& config, const std::shared_ptr<MockBackend>& mock) {
  config.validate();
  if (mock) {
    for (const auto& [id, spec] : config.backends) {
      switch (spec.kind) {
        case BackendKind::chat: ports.add_vlm(id, mock); break;
        case BackendKind::search: if (id == config.search_backend) ports.set_search(id, mock); break;
        case BackendKind::image_edit: if (id == config.edit_backend) ports.set_image_edit(id, mock); break;
        case BackendKind::scorer: if (id == config.scorer_backend) ports.set_scorer(id, mock); break;
      }
    }
    return;
  }
  for (const auto& [id, spec] : config.backends) {
    HttpSettings s{spec.endpoint, spec.api_key_env.empty() ? "" : read_env(spec.api_key_env, id),
                   spec.timeout_seconds};
    if (spec.kind != BackendKind::search && s.endpoint.empty()) {
      fail(ErrorCode::ConfigError, "backend '" + id + "' has no endpoint");
    }
    switch (spec.kind) {
      case BackendKind::chat:
        ports.add_vlm(id, std::make_shared<ChatCompletionsBackend>(s, spec.model));
        break;
      case BackendKind::search:
        if (id == config.search_backend) {
          if (spec.engine_id.empty()) fail(ErrorCode::ConfigError, "search backend '" + id + "' has no engine_id");
          ports.set_search(id, std::make_shared<CustomSearchBackend>(s, spec.engine_id, config.sites));
        }
        break;
      case BackendKind::image_edit:
        if (id == config.edit_backend) ports.set_image_edit(id, std::make_shared<HttpImageEditBackend>(s));
        break;
      case BackendKind::scorer:
        if (id == config.scorer_backend) ports.set_scorer(id, std::make_shared<HttpScorerBackend>(s));
        break;
    }
  }
}

}  // namespace wardrobe
