#include "wardrobe/telemetry.hpp"

#include <algorithm>
#include <ostream>

namespace wardrobe {

std::string_view to_string(Port p) noexcept {
  switch (p) {
    case Port::vlm_chat: return "vlm_chat";
    case Port::search: return "search";
    case Port::image_edit: return "image_edit";
    case Port::vqa_score: return "vqa_score";
    case Port::clip_image_similarity: return "clip_image_similarity";
    case Port::iqa_score: return "iqa_score";
    case Port::face_embed: return "face_embed";
    case Port::mask_region: return "mask_region";
  }
  return "unknown";
}

std::optional<Port> parse_port(std::string_view text) {
  for (auto p : {Port::vlm_chat, Port::search, Port::image_edit, Port::vqa_score, Port::clip_image_similarity,
                 Port::iqa_score, Port::face_embed, Port::mask_region}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::designer: return "designer";
    case Phase::consultant: return "consultant";
    case Phase::critic: return "critic";
    case Phase::none: return "none";
  }
  return "none";
}

void to_json(nlohmann::json& j, const PortCallRecord& r) {
  j = nlohmann::json{{"seq", r.seq},
                     {"port", std::string(to_string(r.port))},
                     {"phase", std::string(to_string(r.phase))},
                     {"purpose", r.purpose},
                     {"subject", r.subject},
                     {"backend_id", r.backend_id},
                     {"tokens_in", r.tokens_in},
                     {"tokens_out", r.tokens_out},
                     {"images_in", r.images_in},
                     {"images_out", r.images_out},
                     {"wall_time", r.wall_time},
                     {"ok", r.ok}};
  if (!r.error.empty()) j["error"] = r.error;
}

std::int64_t estimate_tokens(std::string_view text) noexcept {
  // UTF-8 continuation bytes do not start a character.
  auto chars = std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; });
  return (static_cast<std::int64_t>(chars) + 3) / 4;
}

std::uint64_t Telemetry::append(PortCallRecord record) {
  std::lock_guard lock(mutex_);
  record.seq = records_.size() + 1;
  records_.push_back(std::move(record));
  return records_.back().seq;
}

std::vector<PortCallRecord> Telemetry::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t Telemetry::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::size_t Telemetry::count(Port port) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [port](const PortCallRecord& r) { return r.port == port; }));
}

void Telemetry::write_jsonl(std::ostream& out) const {
  for (const auto& r : snapshot()) out << nlohmann::json(r).dump() << '\n';
}

}  // namespace wardrobe
