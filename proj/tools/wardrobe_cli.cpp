// wardrobe: outfit recommendation and virtual try-on from one photo and a
// style preference.
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "wardrobe/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wardrobe;

namespace {

struct Common {
  std::string config_path;
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
};

AppConfig load_config(const Common& c) {
  if (!c.config_path.empty()) return AppConfig::load(c.config_path);
  if (c.scenario_path.empty()) fail(ErrorCode::ConfigError, "--config is required outside scenario mode");
  return AppConfig::defaults();
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

int run_one(const Common& common, const AppConfig& config, std::string image_path, std::string preference,
            std::string request_id, fs::path run_dir) {
  std::shared_ptr<MockBackend> mock;
  RunMeta meta;
  meta.seed = common.seed;
  Image user;
  if (!common.scenario_path.empty()) {
    mock = MockBackend::from_file(common.scenario_path, common.seed);
    meta.scenario = mock->name();
    auto scripted = mock->scripted_request();
    if (image_path.empty()) {
      if (!scripted) fail(ErrorCode::ScenarioError, "scenario has no request; pass --image");
      user = scripted->first;
    }
    if (preference.empty() && scripted) preference = scripted->second;
  }
  if (!image_path.empty()) user = image::load(image_path, "user");
  if (user.id.empty()) user.id = "user";
  if (request_id.empty()) request_id = meta.scenario ? *meta.scenario : stem_of(image_path);
  if (run_dir.empty()) run_dir = config.run_root / request_id;
  auto request = UserRequest::make(request_id, std::move(user), preference);
  auto outcome = execute_pipeline(config, request, run_dir, mock, meta);
  std::cout << (run_dir / "report.json").string() << "\t" << outcome.report.value("status", "") << "\texit "
            << outcome.exit_code << "\n";
  return outcome.exit_code;
}

int cmd_estimate(const Common& common, std::optional<int> garments, std::string preset, bool as_json) {
  AppConfig config = load_config(common);
  CostParams params = config.estimate;
  if (!preset.empty()) params.pricing = Pricing::preset(preset);
  if (garments) params.garments = *garments;
  auto latency = estimate_latency(params);
  auto cost = estimate_cost(params);
  auto counts = expected_call_counts(params);
  if (as_json) {
    json j{{"pricing", params.pricing.name},
           {"garments", params.garments},
           {"seconds", to_json_value(latency)},
           {"usd", to_json_value(cost)},
           {"expected_calls",
            {{"interpreter", counts.interpreter},
             {"search", counts.searches},
             {"item_diagnoser", counts.item_diagnoser},
             {"image_edit", counts.edits},
             {"tryon_diagnoser", counts.tryon_diagnoser},
             {"describer", counts.describer},
             {"artist", counts.artist}}}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("pricing %s, %d garments\n", params.pricing.name.c_str(), params.garments);
  std::printf("%-11s %10s %10s\n", "phase", "seconds", "usd");
  auto row = [](const char* name, double s, double usd) { std::printf("%-11s %10.1f %10.6f\n", name, s, usd); };
  row("designer", latency.designer, cost.designer);
  row("consultant", latency.consultant, cost.consultant);
  row("critic", latency.critic, cost.critic);
  row("total", latency.total, cost.total);
  return 0;
}

int cmd_validate(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 1;
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    std::cerr << path << ": not valid JSON\n";
    return 1;
  }
  auto problems = validate_scenario(doc, fs::path(path).parent_path());
  for (const auto& p : problems) std::cerr << path << ": " << p << "\n";
  if (problems.empty()) std::cout << path << ": ok\n";
  return problems.empty() ? 0 : 1;
}

// Each request file: {"image": "...", "preference": "...", "id": "..."}.
int cmd_batch(const Common& common, const std::string& dir, int jobs) {
  AppConfig config = load_config(common);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::ConfigError, "no request files in " + dir);
  fs::path root = common.out_dir.empty() ? config.run_root : fs::path(common.out_dir);

  auto one = [&](const fs::path& file) {
    try {
      std::ifstream in(file);
      json r = json::parse(in);
      std::string image = r.value("image", "");
      if (!image.empty() && fs::path(image).is_relative()) image = (file.parent_path() / image).string();
      std::string id = r.value("id", file.stem().string());
      return run_one(common, config, image, r.value("preference", ""), id, root / id);
    } catch (const std::exception& e) {
      spdlog::error("{}: {}", file.string(), e.what());
      return static_cast<int>(kExitFatal);
    }
  };

  int worst = kExitOk;
  auto merge = [&](int code) {
    if (code == kExitFatal || worst == kExitFatal) worst = kExitFatal;
    else worst = std::max(worst, code);
  };
  std::vector<std::future<int>> running;
  for (const auto& file : files) {
    if (static_cast<int>(running.size()) >= jobs) {
      merge(running.front().get());
      running.erase(running.begin());
    }
    running.push_back(std::async(std::launch::async, one, file));
  }
  for (auto& f : running) merge(f.get());
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("wardrobe"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Outfit recommendation and virtual try-on from one photo and a style preference"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Config file")->check(CLI::ExistingFile);
    sub->add_option("--scenario", common.scenario_path, "Mock scenario; forces offline mode")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir, "Run directory (run) or runs root (batch)");
    sub->add_option("--seed", common.seed, "Mock determinism salt");
  };

  std::string image_path, preference;
  auto* run = app.add_subcommand("run", "Run the pipeline for one request");
  add_common(run);
  run->add_option("--image", image_path, "User photo")->check(CLI::ExistingFile);
  run->add_option("--preference", preference, "Style preference text");

  std::string batch_dir;
  int jobs = 2;
  auto* batch = app.add_subcommand("batch", "Run every request file in a directory");
  add_common(batch);
  batch->add_option("--requests", batch_dir, "Directory of request JSON files")->required()->check(CLI::ExistingDirectory);
  batch->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::Range(1, 64));

  std::optional<int> garments;
  std::string preset;
  bool as_json = false;
  auto* estimate = app.add_subcommand("estimate", "Print the latency and cost estimate; makes no calls");
  estimate->add_option("--config", common.config_path, "Config file")->check(CLI::ExistingFile);
  estimate->add_option("--garments", garments, "Number of garments K")->check(CLI::NonNegativeNumber);
  estimate->add_option("--pricing", preset, "Pricing preset");
  estimate->add_flag("--json", as_json, "Machine-readable output");

  std::string scenario_file;
  auto* validate = app.add_subcommand("validate-scenario", "Dry-check a mock scenario file");
  validate->add_option("scenario", scenario_file, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*run) {
      AppConfig config = load_config(common);
      return run_one(common, config, image_path, preference, {}, common.out_dir);
    }
    if (*batch) return cmd_batch(common, batch_dir, jobs);
    if (*estimate) {
      if (common.config_path.empty()) common.scenario_path = "-";  // defaults are fine here
      return cmd_estimate(common, garments, preset, as_json);
    }
    if (*validate) return cmd_validate(scenario_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
