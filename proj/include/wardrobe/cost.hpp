#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "wardrobe/telemetry.hpp"

namespace wardrobe {

struct ModelPrice {
  double input_per_mtok = 0.0;   // USD per million input tokens
  double output_per_mtok = 0.0;  // USD per million output tokens
  double image_per_kimg = 0.0;   // USD per thousand input images
};

struct Pricing {
  std::string name;
  double search_per_query = 0.0;
  double image_edit_per_image = 0.0;
  std::map<std::string, ModelPrice> models;

  // Throws MissingPrice.
  // Falls back to the part after the last '/' for vendor-prefixed ids.
  const ModelPrice& model(const std::string& id) const;

  static Pricing from_json(const nlohmann::json& j);
  // Presets shipped with the binary, e.g. "paper-2025-08". Throws ConfigError.
  static Pricing preset(const std::string& name);
  static std::vector<std::string> presets();
};

nlohmann::json to_json_value(const Pricing& p);

// Average usage of one call of a given class.
struct CallUsage {
  double tokens_in = 0.0;
  double tokens_out = 0.0;
  double images = 0.0;
};

struct UsageProfile {
  CallUsage interpreter{1060, 40, 1};
  CallUsage item_diagnoser{460, 10, 1};
  CallUsage tryon_diagnoser{500, 10, 2};
  CallUsage describer{440, 10, 1};
  CallUsage artist{780, 20, 1};
};

struct CostParams {
  int garments = 3;
  double vlm_call_seconds = 10.0;
  double search_seconds = 25.0;  // search plus downloads
  double edit_seconds = 120.0;
  double expected_expert_calls = 1.8;
  double expected_extra_searches = 0.6;  // per garment
  double expected_extra_tryons = 0.4;    // per garment
  int candidates_per_round = 3;
  std::vector<double> expert_weights{0.4, 0.3, 0.2, 0.1};
  std::vector<std::string> expert_models{"claude-sonnet-4", "gemini-2.5-pro", "llama-4-maverick", "qwen-vl-max"};
  std::string diagnoser_model = "qwen-vl-max";
  std::string critic_model = "qwen-vl-max";
  Pricing pricing;

  void validate() const;
  static CostParams with_preset(const std::string& preset_name);
};

struct PhaseTotals {
  double designer = 0.0;
  double consultant = 0.0;
  double critic = 0.0;
  double total = 0.0;
};

nlohmann::json to_json_value(const PhaseTotals& t);

// Expected number of calls per class for one run.
struct CallCounts {
  double interpreter = 0.0;
  double searches = 0.0;
  double item_diagnoser = 0.0;
  double edits = 0.0;
  double tryon_diagnoser = 0.0;
  double describer = 0.0;
  double artist = 0.0;
};

CallCounts expected_call_counts(const CostParams& params);

// Blended expert price: weight-weighted average of the expert models' prices.
ModelPrice blended_expert_price(const CostParams& params);

// USD for `calls` calls with the given average usage.
double call_cost(double calls, const CallUsage& usage, const ModelPrice& price);

// designer = E * [t_vlm + K * ((1 + x_s) * t_search + x_s * t_vlm)]
// consultant = K * ((1 + x_t) * t_edit + x_t * t_vlm)
// critic = 2 * t_vlm
PhaseTotals estimate_latency(const CostParams& params);
PhaseTotals estimate_cost(const CostParams& params, const UsageProfile& usage = {});

struct Actuals {
  PhaseTotals seconds;
  PhaseTotals usd;
  std::map<std::string, int> calls_by_port;
  // Backends whose records could not be priced (contribute 0 USD).
  std::vector<std::string> unpriced;
};

nlohmann::json to_json_value(const Actuals& a);

// Groups wall time and priced usage by the phase on each record. VLM records
// are priced through backend_models (backend id -> model id).
Actuals actuals_from_telemetry(const std::vector<PortCallRecord>& records, const Pricing& pricing,
                               const std::map<std::string, std::string>& backend_models);

}  // namespace wardrobe
