#include "wardrobe/cost.hpp"

#include <cmath>
#include <set>

#include "wardrobe/errors.hpp"

namespace wardrobe {
namespace pricing_assets {
const std::map<std::string, std::string_view>& embedded_assets();
}

using nlohmann::json;

const ModelPrice& Pricing::model(const std::string& id) const {
  auto it = models.find(id);
  // Router-style ids carry a vendor prefix ("qwen/qwen-vl-max").
  if (it == models.end() && id.find('/') != std::string::npos) it = models.find(id.substr(id.rfind('/') + 1));
  if (it == models.end()) fail(ErrorCode::MissingPrice, "no price for model '" + id + "' in " + name);
  return it->second;
}

Pricing Pricing::from_json(const json& j) {
  Pricing p;
  try {
    p.name = j.value("preset", std::string("custom"));
    p.search_per_query = j.value("search_per_query", 0.0);
    p.image_edit_per_image = j.value("image_edit_per_image", 0.0);
    const json models_section = j.value("models", json::object());
    for (const auto& [id, m] : models_section.items()) {
      p.models[id] = ModelPrice{m.value("input_per_mtok", 0.0), m.value("output_per_mtok", 0.0),
                                m.value("image_per_kimg", 0.0)};
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("bad pricing: ") + e.what());
  }
  return p;
}

Pricing Pricing::preset(const std::string& name) {
  const auto& assets = pricing_assets::embedded_assets();
  auto it = assets.find(name + ".json");
  if (it == assets.end()) fail(ErrorCode::ConfigError, "unknown pricing preset '" + name + "'");
  return from_json(json::parse(it->second));
}

std::vector<std::string> Pricing::presets() {
  std::vector<std::string> out;
  for (const auto& [file, _] : pricing_assets::embedded_assets()) out.push_back(file.substr(0, file.rfind('.')));
  return out;
}

json to_json_value(const Pricing& p) {
  json models = json::object();
  for (const auto& [id, m] : p.models) {
    models[id] = {{"input_per_mtok", m.input_per_mtok},
                  {"output_per_mtok", m.output_per_mtok},
                  {"image_per_kimg", m.image_per_kimg}};
  }
  return {{"preset", p.name},
          {"search_per_query", p.search_per_query},
          {"image_edit_per_image", p.image_edit_per_image},
          {"models", models}};
}

void CostParams::validate() const {
  require(garments >= 0, "garments must be >= 0");
  require(vlm_call_seconds >= 0 && search_seconds >= 0 && edit_seconds >= 0, "latencies must be >= 0");
  require(expected_expert_calls >= 0 && expected_extra_searches >= 0 && expected_extra_tryons >= 0,
          "expected counts must be >= 0");
  require(candidates_per_round >= 1, "candidates_per_round must be >= 1");
  require(!expert_weights.empty() && expert_weights.size() == expert_models.size(),
          "one weight per expert model");
  double sum = 0.0;
  for (double w : expert_weights) {
    require(w >= 0.0, "expert weights must be non-negative");
    sum += w;
  }
  require(std::abs(sum - 1.0) < 1e-9, "expert weights must sum to 1");
}

CostParams CostParams::with_preset(const std::string& preset_name) {
  CostParams p;
  p.pricing = Pricing::preset(preset_name);
  return p;
}

json to_json_value(const PhaseTotals& t) {
  return {{"designer", t.designer}, {"consultant", t.consultant}, {"critic", t.critic}, {"total", t.total}};
}

CallCounts expected_call_counts(const CostParams& p) {
  p.validate();
  const double K = p.garments;
  const double E = p.expected_expert_calls;
  CallCounts c;
  c.interpreter = E;
  c.searches = E * K * (1.0 + p.expected_extra_searches);
  c.item_diagnoser = E * K * p.expected_extra_searches;
  c.edits = K * (1.0 + p.expected_extra_tryons);
  c.tryon_diagnoser = K * p.expected_extra_tryons;
  c.describer = 1.0;
  c.artist = 1.0;
  return c;
}

ModelPrice blended_expert_price(const CostParams& p) {
  p.validate();
  ModelPrice blended;
  for (std::size_t i = 0; i < p.expert_models.size(); ++i) {
    const auto& m = p.pricing.model(p.expert_models[i]);
    blended.input_per_mtok += p.expert_weights[i] * m.input_per_mtok;
    blended.output_per_mtok += p.expert_weights[i] * m.output_per_mtok;
    blended.image_per_kimg += p.expert_weights[i] * m.image_per_kimg;
  }
  return blended;
}

double call_cost(double calls, const CallUsage& u, const ModelPrice& price) {
  return calls * (u.tokens_in * price.input_per_mtok / 1e6 + u.tokens_out * price.output_per_mtok / 1e6 +
                  u.images * price.image_per_kimg / 1e3);
}

PhaseTotals estimate_latency(const CostParams& p) {
  p.validate();
  const double K = p.garments;
  const double xs = p.expected_extra_searches;
  const double xt = p.expected_extra_tryons;
  PhaseTotals t;
  t.designer = p.expected_expert_calls * (p.vlm_call_seconds + K * ((1.0 + xs) * p.search_seconds + xs * p.vlm_call_seconds));
  t.consultant = K * ((1.0 + xt) * p.edit_seconds + xt * p.vlm_call_seconds);
  t.critic = 2.0 * p.vlm_call_seconds;
  t.total = t.designer + t.consultant + t.critic;
  return t;
}

PhaseTotals estimate_cost(const CostParams& p, const UsageProfile& usage) {
  auto c = expected_call_counts(p);
  const auto& diag = p.pricing.model(p.diagnoser_model);
  const auto& critic = p.pricing.model(p.critic_model);
  PhaseTotals t;
  t.designer = c.searches * p.pricing.search_per_query + call_cost(c.item_diagnoser, usage.item_diagnoser, diag) +
               call_cost(c.interpreter, usage.interpreter, blended_expert_price(p));
  t.consultant = call_cost(c.tryon_diagnoser, usage.tryon_diagnoser, diag) +
                 c.edits * p.candidates_per_round * p.pricing.image_edit_per_image;
  t.critic = call_cost(c.describer, usage.describer, critic) + call_cost(c.artist, usage.artist, critic);
  t.total = t.designer + t.consultant + t.critic;
  return t;
}

json to_json_value(const Actuals& a) {
  return {{"seconds", to_json_value(a.seconds)},
          {"usd", to_json_value(a.usd)},
          {"calls_by_port", a.calls_by_port},
          {"unpriced", a.unpriced}};
}

Actuals actuals_from_telemetry(const std::vector<PortCallRecord>& records, const Pricing& pricing,
                               const std::map<std::string, std::string>& backend_models) {
  Actuals a;
  std::set<std::string> unpriced;
  auto add = [](PhaseTotals& t, Phase phase, double v) {
    switch (phase) {
      case Phase::designer: t.designer += v; break;
      case Phase::consultant: t.consultant += v; break;
      case Phase::critic: t.critic += v; break;
      case Phase::none: break;
    }
    t.total += v;
  };
  for (const auto& r : records) {
    ++a.calls_by_port[std::string(to_string(r.port))];
    add(a.seconds, r.phase, r.wall_time);
    double usd = 0.0;
    switch (r.port) {
      case Port::vlm_chat: {
        auto model = backend_models.find(r.backend_id);
        auto price = model == backend_models.end() ? pricing.models.end() : pricing.models.find(model->second);
        if (price == pricing.models.end()) {
          unpriced.insert(r.backend_id);
          break;
        }
        usd = call_cost(1.0,
                        {static_cast<double>(r.tokens_in), static_cast<double>(r.tokens_out),
                         static_cast<double>(r.images_in)},
                        price->second);
        break;
      }
      case Port::search:
        usd = pricing.search_per_query;
        break;
      case Port::image_edit:
        usd = static_cast<double>(r.images_out) * pricing.image_edit_per_image;
        break;
      default:
        break;  // local scorers are free
    }
    add(a.usd, r.phase, usd);
  }
  a.unpriced.assign(unpriced.begin(), unpriced.end());
  return a;
}

}  // namespace wardrobe
