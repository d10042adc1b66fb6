#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wardrobe/consultant.hpp"
#include "wardrobe/cost.hpp"
#include "wardrobe/critic.hpp"
#include "wardrobe/designer.hpp"
#include "wardrobe/mock_backend.hpp"

namespace wardrobe {

enum class BackendKind { chat, search, image_edit, scorer };

struct BackendSpec {
  std::string id;
  BackendKind kind = BackendKind::chat;
  std::string endpoint;
  std::string model;        // chat backends; also the pricing key
  std::string api_key_env;  // name of the environment variable holding the credential
  std::string engine_id;    // search backends
  int timeout_seconds = 120;
};

// One structured file:
//   {
//     "backends":   {"<id>": {"kind": "chat|search|image_edit|scorer", "endpoint": ...,
//                             "model": ..., "api_key_env": ..., "engine_id": ...}},
//     "designer":   {"experts": ["<id>", ...] | [{"backend": "<id>", "weight": w}, ...],
//                    "item_diagnoser": "<id>", "search": "<id>", "omega": .., "tau": {..},
//                    "max_iterations": .., "search_num": .., "detect_garment_model": ..},
//     "consultant": {"image_edit": "<id>", "diagnoser": "<id>", "sigma": {..},
//                    "candidates_per_round": .., "max_iterations": ..},
//     "critic":     {"describer": "<id>", "artist": "<id>"},
//     "scorer":     "<id>",
//     "sites":      ["amazon.com", ...],
//     "pricing":    "<preset>" | {inline pricing},
//     "estimate":   {"vlm_call_seconds": .., ...},
//     "run_root":   "runs"
//   }
// Credentials are never inline: a backend names the variable to read.
struct AppConfig {
  std::map<std::string, BackendSpec> backends;
  ExpertPool experts;
  DesignerConfig designer;
  std::string search_backend;
  ConsultantConfig consultant;
  std::string edit_backend;
  CriticConfig critic;
  std::string scorer_backend;
  std::vector<std::string> sites{"amazon.com", "taobao.com", "walmart.com", "etsy.com"};
  Pricing pricing;
  CostParams estimate;
  std::filesystem::path run_root = "runs";

  // Every referenced backend exists and has the right kind. Throws ConfigError.
  void validate() const;

  // backend id -> model id, for pricing VLM calls.
  std::map<std::string, std::string> backend_models() const;

  static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static AppConfig load(const std::filesystem::path& path);
  // The ranked four-expert setup with claude, gemini, llama and qwen ids; qwen
  // also diagnoses and critiques.
  static AppConfig defaults();
};

// Registers backends on `ports`. With a mock, every role is served by it and
// nothing is read from the environment. Live mode reads credentials and
// throws ConfigError for unset variables.
void wire_ports(Ports& ports, const AppConfig& config, const std::shared_ptr<MockBackend>& mock);

}  // namespace wardrobe
