#include "wardrobe/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

namespace wardrobe {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string extension_for(const Image& img) {
  const auto& b = img.bytes;
  if (b.size() >= 2 && b[0] == 0xFF && b[1] == 0xD8) return ".jpg";
  if (b.size() >= 4 && b[0] == 'R' && b[1] == 'I' && b[2] == 'F' && b[3] == 'F') return ".webp";
  return ".png";
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "image" : out;
}

// Writes images once each and remembers where they went.
class ImageStore {
 public:
  explicit ImageStore(fs::path run_dir) : dir_(std::move(run_dir)) { fs::create_directories(dir_ / "images"); }

  std::string put(const Image& img) {
    if (img.empty()) return {};
    auto known = by_id_.find(img.id);
    const std::string print = image::fingerprint(img.bytes);
    if (known != by_id_.end() && known->second.second == print) return known->second.first;
    std::string stem = safe_name(img.id);
    std::string rel = "images/" + stem + extension_for(img);
    for (int n = 2; used_.count(rel); ++n) rel = "images/" + stem + "-" + std::to_string(n) + extension_for(img);
    std::ofstream out(dir_ / rel, std::ios::binary);
    out.write(reinterpret_cast<const char*>(img.bytes.data()), static_cast<std::streamsize>(img.bytes.size()));
    used_.insert(rel);
    by_id_[img.id] = {rel, print};
    index_[img.id] = rel;
    return rel;
  }

  const json& index() const { return index_; }

 private:
  fs::path dir_;
  std::map<std::string, std::pair<std::string, std::string>> by_id_;
  std::set<std::string> used_;
  json index_ = json::object();
};

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json thresholds_json(const CategoryThresholds& t) {
  json j = json::object();
  for (const auto& [c, v] : t) j[std::string(to_string(c))] = v;
  return j;
}

}  // namespace

int exit_code_for(const json& report) {
  if (report.value("status", "") == "failed") return kExitFatal;
  bool ok = report.contains("designer") && report["designer"].value("accepted", false);
  if (ok && report.contains("consultant") && report["consultant"].is_object()) {
    for (const auto& stage : report["consultant"]["stages"]) ok = ok && stage.value("satisfied", false);
  } else {
    ok = false;
  }
  return ok ? kExitOk : kExitBestEffort;
}

json stable_view(json report) {
  report.erase("created_at");
  return report;
}

RunOutcome execute_pipeline(const AppConfig& config, const UserRequest& request, const fs::path& run_dir,
                            const std::shared_ptr<MockBackend>& mock, const RunMeta& meta) {
  RunOutcome outcome;
  outcome.run_dir = run_dir;
  fs::create_directories(run_dir);
  ImageStore images(run_dir);

  Telemetry telemetry;
  PortOptions options;
  options.sites = config.sites;
  options.simulated_time = static_cast<bool>(mock);
  Ports ports(telemetry, options);

  json report{{"tool", {{"name", "wardrobe"}, {"version", std::string(kToolVersion)}}},
              {"mode", mock ? "scenario" : "live"},
              {"scenario", meta.scenario ? json(*meta.scenario) : json(nullptr)},
              {"seed", meta.seed},
              {"created_at", utc_timestamp()},
              {"request", {{"id", request.request_id},
                           {"preference", request.preference_text},
                           {"image", images.put(request.user_image)}}},
              {"designer", nullptr},
              {"consultant", nullptr},
              {"evaluation", nullptr},
              {"error", nullptr}};

  std::optional<DesignerResult> designed;
  std::optional<TryOnState> tried;
  try {
    wire_ports(ports, config, mock);

    Designer designer(ports, config.designer);
    designed = designer.run(request, config.experts);
    const auto& proposal = designed->proposal;
    json garments = json::array();
    for (const auto& g : proposal.garments) {
      json gj = g;
      gj["image"] = images.put(g.candidate.image);
      gj["tau"] = config.designer.tau.at(g.category);
      garments.push_back(std::move(gj));
    }
    json attempts = json::array();
    for (const auto& a : designed->attempts) attempts.push_back(a);
    report["designer"] = {{"accepted", proposal.accepted},
                          {"outfit_score", proposal.outfit_score},
                          {"omega", config.designer.omega},
                          {"expert_index", proposal.spec.expert_index},
                          {"spec", proposal.spec},
                          {"garments", garments},
                          {"expert_attempts", attempts}};

    Consultant consultant(ports, config.consultant);
    consultant.set_image_sink([&](const Image& img) { images.put(img); });
    tried = consultant.run(request.user_image, proposal);
    json stages = json::array();
    for (const auto& s : tried->stages) {
      json sj = s;
      sj["input_image_path"] = images.put(s.input_image);
      sj["chosen_image_path"] = images.put(s.chosen_image);
      sj["sigma"] = config.consultant.sigma.at(s.category);
      stages.push_back(std::move(sj));
    }
    Image final_image = tried->current_image;
    final_image.id = "final";
    report["consultant"] = {{"stages", stages}, {"final_image", images.put(final_image)}};

    Critic critic(ports, config.critic);
    report["evaluation"] = critic.evaluate(request, tried->current_image);
    report["status"] = "completed";
  } catch (const std::exception& e) {
    spdlog::error("run failed: {}", e.what());
    report["status"] = "failed";
    report["error"] = e.what();
    if (designed && report["designer"].is_null()) report["designer"] = {{"accepted", designed->proposal.accepted}};
  }

  CostParams params = config.estimate;
  if (designed) params.garments = static_cast<int>(designed->proposal.garments.size());
  json estimate = json::object();
  try {
    estimate = {{"garments", params.garments},
                {"seconds", to_json_value(estimate_latency(params))},
                {"usd", to_json_value(estimate_cost(params))}};
  } catch (const Error& e) {
    estimate = {{"error", e.what()}};
  }
  auto records = telemetry.snapshot();
  report["cost"] = {{"pricing", config.pricing.name},
                    {"estimate", estimate},
                    {"actual", to_json_value(actuals_from_telemetry(records, config.pricing, config.backend_models()))}};

  json iterations{{"expert_calls", designed ? json(designed->attempts.size()) : json(nullptr)}};
  if (designed) {
    json item = json::object();
    for (const auto& g : designed->proposal.garments) item[std::string(to_string(g.category))] = g.iterations_used;
    iterations["item"] = item;
  }
  if (tried) {
    json tryon = json::object();
    for (const auto& s : tried->stages) tryon[std::string(to_string(s.category))] = s.regenerations + 1;
    iterations["tryon"] = tryon;
  }
  report["iterations"] = iterations;
  report["thresholds"] = {{"tau", thresholds_json(config.designer.tau)},
                          {"sigma", thresholds_json(config.consultant.sigma)},
                          {"omega", config.designer.omega}};
  report["images"] = images.index();

  outcome.exit_code = exit_code_for(report);
  report["exit_code"] = outcome.exit_code;
  outcome.report = report;

  std::ofstream(run_dir / "report.json") << report.dump(2) << '\n';
  std::ofstream transcript(run_dir / "transcript.log");
  telemetry.write_jsonl(transcript);
  spdlog::info("run finished with exit code {} in {}", outcome.exit_code, run_dir.string());
  return outcome;
}

}  // namespace wardrobe
