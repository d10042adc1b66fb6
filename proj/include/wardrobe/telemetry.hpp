#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wardrobe {

enum class Port { vlm_chat, search, image_edit, vqa_score, clip_image_similarity, iqa_score, face_embed, mask_region };
std::string_view to_string(Port p) noexcept;
std::optional<Port> parse_port(std::string_view text);

enum class Phase { designer, consultant, critic, none };
std::string_view to_string(Phase p) noexcept;

// Why a port is being called. `purpose` names the pipeline step
// ("item_search", "tryon_diagnose", ...); `subject` is usually a category.
struct CallContext {
  Phase phase = Phase::none;
  std::string purpose;
  std::string subject;
};

struct PortCallRecord {
  std::uint64_t seq = 0;
  Port port = Port::vlm_chat;
  Phase phase = Phase::none;
  std::string purpose;
  std::string subject;
  std::string backend_id;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t images_in = 0;
  std::int64_t images_out = 0;
  double wall_time = 0.0;
  bool ok = true;
  std::string error;
};

void to_json(nlohmann::json& j, const PortCallRecord& r);

// ceil(code points / 4).
std::int64_t estimate_tokens(std::string_view text) noexcept;

// Append-only record channel shared by every port of one run.
class Telemetry {
 public:
  std::uint64_t append(PortCallRecord record);
  std::vector<PortCallRecord> snapshot() const;
  std::size_t size() const;
  std::size_t count(Port port) const;
  // One JSON object per line, in append order.
  void write_jsonl(std::ostream& out) const;

 private:
  mutable std::mutex mutex_;
  std::vector<PortCallRecord> records_;
};

}  // namespace wardrobe
