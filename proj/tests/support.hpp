#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "wardrobe/config.hpp"
#include "wardrobe/mock_backend.hpp"
#include "wardrobe/pipeline.hpp"

namespace testing {

using nlohmann::json;
using namespace wardrobe;

inline std::filesystem::path source_dir() { return WARDROBE_SOURCE_DIR; }
inline std::filesystem::path scenario_path(const std::string& name) {
  return source_dir() / "scenarios" / (name + ".json");
}

inline json load_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

inline json make_scenario(json replies, json images = json::object(), const std::string& exhaustion = "repeat_last") {
  return json{{"name", "unit"}, {"exhaustion", exhaustion}, {"images", std::move(images)}, {"replies", std::move(replies)}};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("wardrobe-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// In-process equivalent of `wardrobe run --scenario <name>`.
inline RunOutcome run_scenario(const std::string& name, const std::filesystem::path& run_dir, std::uint64_t seed = 0) {
  auto mock = MockBackend::from_file(scenario_path(name), seed);
  auto scripted = mock->scripted_request();
  auto request = UserRequest::make(name, scripted->first, scripted->second);
  return execute_pipeline(AppConfig::defaults(), request, run_dir, mock, RunMeta{mock->name(), seed});
}

// Ports wired to one scripted mock, with the default backend ids.
struct Rig {
  Telemetry telemetry;
  std::shared_ptr<MockBackend> mock;
  Ports ports;

  explicit Rig(json scenario, PortOptions options = {}, std::uint64_t seed = 0)
      : mock(std::make_shared<MockBackend>(std::move(scenario), source_dir() / "scenarios", seed)),
        ports(telemetry, with_sim_time(options)) {
    for (const char* id : {"claude", "gemini", "llama", "qwen"}) ports.add_vlm(id, mock);
    ports.set_search("search", mock);
    ports.set_image_edit("edit", mock);
    ports.set_scorer("scorer", mock);
  }

  static PortOptions with_sim_time(PortOptions o) {
    o.simulated_time = true;
    return o;
  }

  std::vector<MockBackend::Captured> calls(Port p, const std::string& purpose = {}) const {
    std::vector<MockBackend::Captured> out;
    for (auto& c : mock->captured(p)) {
      if (purpose.empty() || c.context.purpose == purpose) out.push_back(c);
    }
    return out;
  }
};

inline Image test_image(const std::string& id, int w = 96, int h = 128, Rgb c = {120, 90, 60}) {
  return image::solid(id, w, h, c);
}

inline UserRequest test_request(const std::string& preference = "smart casual outfit for a gallery opening") {
  return UserRequest::make("req", test_image("user", 128, 192), preference);
}

// Interpreter reply for a set of categories (canonical names).
inline std::string sheet_reply(const std::vector<GarmentCategory>& cats, const std::string& gender = "woman") {
  json prompts{{"gender", gender}};
  json names = json::array();
  for (auto c : cats) {
    std::string n(reply_name(c));
    names.push_back(n);
    prompts[n] = "Women's, " + std::string(to_string(c)) + " item, cotton, HD, no model.";
    prompts[n + " short"] = std::string(to_string(c)) + " item.";
  }
  return json{{"category", names}, {"prompts", prompts}}.dump();
}

inline json hits_for(const std::string& prefix, int n) {
  json hits = json::array();
  for (int i = 0; i < n; ++i) {
    hits.push_back({{"image_url", "mock://" + prefix + "-" + std::to_string(i)},
                    {"page_url", "https://www.amazon.com/dp/" + prefix + "-" + std::to_string(i)}});
  }
  return hits;
}

inline json images_for(const std::string& prefix, int n) {
  json images = json::object();
  for (int i = 0; i < n; ++i) {
    images[prefix + "-" + std::to_string(i)] = {{"color", {40 * i % 256, 100, 200}}, {"width", 64}, {"height", 80}};
  }
  return images;
}

inline std::string pairs_reply(const std::vector<std::string>& negatives) {
  json pos = json::array(), neg = json::array();
  for (const auto& n : negatives) {
    pos.push_back("not " + n);
    neg.push_back(n);
  }
  return json{{"positive prompt", pos}, {"negative prompt", neg}}.dump();
}

// Independent clamped geometric mean: direct product then root.
inline double oracle_outfit_score(const std::vector<double>& s, const std::vector<double>& tau) {
  double prod = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) prod *= std::min(s[i] / tau[i], 1.0);
  return std::pow(prod, 1.0 / static_cast<double>(s.size()));
}

// Step-through model of the feedback loop over a scripted score sequence;
// nullopt marks an unusable round.
struct LoopExpectation {
  int iterations = 0;
  bool satisfied = false;
  bool has_value = false;
  double best = 0.0;
  int best_iteration = 0;
  int diagnoser_calls = 0;
};

inline LoopExpectation oracle_loop(const std::vector<std::optional<double>>& scores, double threshold, int max_iterations) {
  LoopExpectation e;
  for (int k = 1; k <= max_iterations; ++k) {
    e.iterations = k;
    const auto& s = scores[static_cast<std::size_t>(k - 1)];
    if (!s) continue;
    if (!e.has_value || *s > e.best) {
      e.best = *s;
      e.best_iteration = k;
      e.has_value = true;
    }
    if (*s >= threshold) {
      e.satisfied = true;
      break;
    }
    if (k < max_iterations) ++e.diagnoser_calls;
  }
  return e;
}

// Minimal JSON Schema checker: type, enum, required, properties, items,
// minimum, maximum and local $ref. Returns the first problem or "".
class SchemaChecker {
 public:
  explicit SchemaChecker(json root) : root_(std::move(root)) {}

  std::string check(const json& value) const { return check(value, root_, "$"); }

 private:
  const json& resolve(const json& schema) const {
    if (!schema.contains("$ref")) return schema;
    std::string ref = schema["$ref"];
    const std::string prefix = "#/definitions/";
    return root_.at("definitions").at(ref.substr(prefix.size()));
  }

  static bool type_ok(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
  }

  std::string check(const json& v, const json& raw, const std::string& at) const {
    const json& s = resolve(raw);
    if (s.contains("type")) {
      bool ok = false;
      if (s["type"].is_array()) {
        for (const auto& t : s["type"]) ok = ok || type_ok(v, t);
      } else {
        ok = type_ok(v, s["type"]);
      }
      if (!ok) return at + ": wrong type";
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || e == v;
      if (!found) return at + ": not in enum";
    }
    if (v.is_number()) {
      if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>()) return at + ": below minimum";
      if (s.contains("maximum") && v.get<double>() > s["maximum"].get<double>()) return at + ": above maximum";
    }
    if (v.is_object()) {
      for (const auto& r : s.value("required", json::array())) {
        if (!v.contains(r.get<std::string>())) return at + ": missing " + r.get<std::string>();
      }
      if (s.contains("properties")) {
        for (const auto& [k, sub] : s["properties"].items()) {
          if (!v.contains(k)) continue;
          auto err = check(v[k], sub, at + "." + k);
          if (!err.empty()) return err;
        }
      }
    }
    if (v.is_array() && s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        auto err = check(v[i], s["items"], at + "[" + std::to_string(i) + "]");
        if (!err.empty()) return err;
      }
    }
    return {};
  }

  json root_;
};

inline std::string check_report_schema(const json& report) {
  return SchemaChecker(load_json(source_dir() / "docs" / "report.schema.json")).check(report);
}

}  // namespace testing
