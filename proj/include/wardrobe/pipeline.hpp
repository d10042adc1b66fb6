#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "wardrobe/config.hpp"

namespace wardrobe {

inline constexpr std::string_view kToolVersion = "0.3.0";

enum ExitCode : int { kExitOk = 0, kExitFatal = 1, kExitBestEffort = 2 };

struct RunMeta {
  std::optional<std::string> scenario;  // scenario name in mock mode
  std::uint64_t seed = 0;
};

struct RunOutcome {
  int exit_code = kExitFatal;
  nlohmann::json report;
  std::filesystem::path run_dir;
};

// designer -> consultant -> critic -> cost actuals. Always writes
// run_dir/report.json and run_dir/transcript.log, plus every image under
// run_dir/images. Fatal errors yield exit 1 with whatever was finished.
RunOutcome execute_pipeline(const AppConfig& config, const UserRequest& request, const std::filesystem::path& run_dir,
                            const std::shared_ptr<MockBackend>& mock, const RunMeta& meta = {});

// 0 when the outfit was accepted and every try-on stage met its threshold,
// 2 otherwise.
int exit_code_for(const nlohmann::json& report);

// The report with volatile fields (the timestamp) removed.
nlohmann::json stable_view(nlohmann::json report);

}  // namespace wardrobe
