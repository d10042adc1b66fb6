#include "wardrobe/domain.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace wardrobe {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

// Scans forward from `open` (a '{') to its matching '}', honouring JSON
// string literals. Returns npos when unbalanced.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

const json* find_key(const json& obj, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    auto it = obj.find(std::string(key));
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

std::vector<std::string> string_list(const json& value, std::string_view what) {
  std::vector<std::string> out;
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
  } else if (value.is_array()) {
    for (const auto& item : value) {
      if (!item.is_string()) fail(ErrorCode::SchemaViolation, std::string(what) + " must hold strings");
      out.push_back(item.get<std::string>());
    }
  } else {
    fail(ErrorCode::SchemaViolation, std::string(what) + " must be a string or a list of strings");
  }
  return out;
}

std::string description_field(const json& prompts, GarmentCategory c, bool short_form) {
  std::string reply = std::string(reply_name(c));
  std::string canonical = std::string(to_string(c));
  const json* value = short_form ? find_key(prompts, {reply + " short", canonical + "_short", canonical + " short"})
                                 : find_key(prompts, {reply, canonical});
  if (value == nullptr || !value->is_string()) {
    fail(ErrorCode::SchemaViolation, "missing " + std::string(short_form ? "short " : "") + "description for '" + reply + "'");
  }
  std::string text = trim(value->get<std::string>());
  if (text.empty()) {
    fail(ErrorCode::SchemaViolation, "empty " + std::string(short_form ? "short " : "") + "description for '" + reply + "'");
  }
  return text;
}

}  // namespace

std::string_view to_string(GarmentCategory c) noexcept {
  switch (c) {
    case GarmentCategory::upper_body: return "upper_body";
    case GarmentCategory::lower_body: return "lower_body";
    case GarmentCategory::dress: return "dress";
    case GarmentCategory::shoes: return "shoes";
    case GarmentCategory::hat: return "hat";
    case GarmentCategory::glasses: return "glasses";
    case GarmentCategory::belt: return "belt";
    case GarmentCategory::scarf: return "scarf";
  }
  return "unknown";
}

std::string_view reply_name(GarmentCategory c) noexcept {
  switch (c) {
    case GarmentCategory::upper_body: return "upper body";
    case GarmentCategory::lower_body: return "lower body";
    case GarmentCategory::dress: return "dresses";
    default: return to_string(c);
  }
}

std::optional<GarmentCategory> parse_category(std::string_view text) {
  std::string key = lower(trim(text));
  for (auto c : kAllCategories) {
    if (key == to_string(c) || key == reply_name(c)) return c;
  }
  if (key == "upper-body" || key == "upper") return GarmentCategory::upper_body;
  if (key == "lower-body" || key == "lower") return GarmentCategory::lower_body;
  return std::nullopt;
}

std::string_view to_string(Gender g) noexcept { return g == Gender::man ? "man" : "woman"; }

std::optional<Gender> parse_gender(std::string_view text) {
  std::string key = lower(trim(text));
  if (key == "man") return Gender::man;
  if (key == "woman") return Gender::woman;
  return std::nullopt;
}

UserRequest UserRequest::make(std::string request_id, Image user_image, std::string preference_text) {
  if (trim(preference_text).empty()) fail(ErrorCode::PreconditionViolation, "preference text is empty");
  Image decoded = image::from_bytes(user_image.id, user_image.bytes);
  if (decoded.width < 64 || decoded.height < 64) {
    fail(ErrorCode::InvalidImage, "user image must be at least 64x64, got " + std::to_string(decoded.width) + "x" +
                                      std::to_string(decoded.height));
  }
  return UserRequest{std::move(request_id), std::move(decoded), std::move(preference_text)};
}

const GarmentDescription& GarmentSpecSheet::entry(GarmentCategory c) const {
  auto it = entries.find(c);
  if (it == entries.end()) fail(ErrorCode::SchemaViolation, "no entry for " + std::string(to_string(c)));
  return it->second;
}

bool GarmentSpecSheet::has(GarmentCategory c) const {
  return std::find(categories.begin(), categories.end(), c) != categories.end();
}

void validate(const GarmentSpecSheet& sheet) {
  for (std::size_t i = 0; i < sheet.categories.size(); ++i) {
    for (std::size_t k = i + 1; k < sheet.categories.size(); ++k) {
      if (sheet.categories[i] == sheet.categories[k]) {
        fail(ErrorCode::SchemaViolation, "duplicate category " + std::string(to_string(sheet.categories[i])));
      }
    }
  }
  bool dress = sheet.has(GarmentCategory::dress);
  bool upper = sheet.has(GarmentCategory::upper_body);
  bool lower_body = sheet.has(GarmentCategory::lower_body);
  if (dress && (upper || lower_body)) {
    fail(ErrorCode::ConflictingCategories, "a dress cannot be combined with upper or lower body garments");
  }
  if (!dress && !(upper && lower_body)) {
    fail(ErrorCode::SchemaViolation, "need either a dress or both upper and lower body garments");
  }
  for (auto c : sheet.categories) {
    auto it = sheet.entries.find(c);
    if (it == sheet.entries.end() || trim(it->second.full_description).empty() ||
        trim(it->second.short_description).empty()) {
      fail(ErrorCode::SchemaViolation, "empty description for " + std::string(to_string(c)));
    }
  }
  for (const auto& [c, _] : sheet.entries) {
    if (!sheet.has(c)) fail(ErrorCode::SchemaViolation, "entry for unlisted category " + std::string(to_string(c)));
  }
  if (sheet.expert_index < 1) fail(ErrorCode::SchemaViolation, "expert index must be positive");
}

json extract_json_object(std::string_view reply) {
  for (std::size_t open = reply.find('{'); open != std::string_view::npos; open = reply.find('{', open + 1)) {
    std::size_t close = matching_brace(reply, open);
    if (close == std::string_view::npos) break;
    json parsed = json::parse(reply.substr(open, close - open + 1), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  fail(ErrorCode::MalformedJson, "no JSON object found in reply");
}

GarmentSpecSheet parse_spec_sheet(std::string_view reply, int expert_index) {
  json j = extract_json_object(reply);
  const json* cats = find_key(j, {"category", "categories"});
  if (cats == nullptr) fail(ErrorCode::SchemaViolation, "missing 'category' list");
  const json* prompts = find_key(j, {"prompts"});
  if (prompts == nullptr || !prompts->is_object()) fail(ErrorCode::SchemaViolation, "missing 'prompts' object");

  GarmentSpecSheet sheet;
  sheet.expert_index = expert_index;

  const json* gender = find_key(*prompts, {"gender"});
  if (gender == nullptr) gender = find_key(j, {"gender"});
  if (gender == nullptr || !gender->is_string()) fail(ErrorCode::SchemaViolation, "missing gender");
  auto g = parse_gender(gender->get<std::string>());
  if (!g) fail(ErrorCode::SchemaViolation, "gender must be 'man' or 'woman', got '" + gender->get<std::string>() + "'");
  sheet.gender = *g;

  for (const auto& name : string_list(*cats, "category")) {
    auto c = parse_category(name);
    if (!c) fail(ErrorCode::SchemaViolation, "unknown category '" + name + "'");
    if (!sheet.has(*c)) sheet.categories.push_back(*c);
  }

  bool dress = sheet.has(GarmentCategory::dress);
  if (dress && (sheet.has(GarmentCategory::upper_body) || sheet.has(GarmentCategory::lower_body))) {
    fail(ErrorCode::ConflictingCategories, "reply lists a dress together with upper or lower body garments");
  }

  for (auto c : sheet.categories) {
    sheet.entries[c] = GarmentDescription{description_field(*prompts, c, false), description_field(*prompts, c, true)};
  }
  validate(sheet);
  return sheet;
}

json to_reply_json(const GarmentSpecSheet& sheet) {
  json categories = json::array();
  json prompts = json::object();
  prompts["gender"] = std::string(to_string(sheet.gender));
  for (auto c : sheet.categories) {
    categories.push_back(std::string(reply_name(c)));
    const auto& e = sheet.entry(c);
    prompts[std::string(reply_name(c))] = e.full_description;
    prompts[std::string(reply_name(c)) + " short"] = e.short_description;
  }
  return json{{"category", categories}, {"prompts", prompts}};
}

std::string normalize_phrase(std::string_view phrase) {
  auto words = split_words(phrase);
  if (words.size() > NegativePromptSet::kMaxWords) {
    spdlog::warn("truncating feedback phrase '{}' to {} words", std::string(phrase), NegativePromptSet::kMaxWords);
    words.resize(NegativePromptSet::kMaxWords);
  }
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

bool NegativePromptSet::insert(PromptPair pair) {
  pair.positive = normalize_phrase(pair.positive);
  pair.negative = normalize_phrase(pair.negative);
  if (pair.negative.empty() || contains(pair.negative)) return false;
  pairs_.push_back(std::move(pair));
  return true;
}

std::vector<std::string> NegativePromptSet::negatives() const {
  std::vector<std::string> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.negative);
  return out;
}

bool NegativePromptSet::contains(std::string_view negative) const {
  std::string key = lower(normalize_phrase(negative));
  return std::any_of(pairs_.begin(), pairs_.end(), [&](const PromptPair& p) { return lower(p.negative) == key; });
}

NegativePromptSet parse_prompt_pairs(std::string_view reply) {
  json j = extract_json_object(reply);
  const json* pos = find_key(j, {"positive prompt", "positive_prompt", "positive prompts", "positive_prompts"});
  const json* neg = find_key(j, {"negative prompt", "negative_prompt", "negative prompts", "negative_prompts"});
  if (neg == nullptr) fail(ErrorCode::SchemaViolation, "diagnoser reply has no negative prompt");
  auto negatives = string_list(*neg, "negative prompt");
  std::vector<std::string> positives = pos ? string_list(*pos, "positive prompt") : std::vector<std::string>{};
  if (pos != nullptr && positives.size() != negatives.size()) {
    spdlog::warn("diagnoser returned {} positive and {} negative phrases; pairing by position", positives.size(),
                 negatives.size());
  }
  NegativePromptSet out;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    out.insert(PromptPair{i < positives.size() ? positives[i] : std::string{}, negatives[i]});
  }
  if (out.empty()) fail(ErrorCode::SchemaViolation, "diagnoser reply has no usable negative phrase");
  return out;
}

std::string validate_candidate_link(std::string_view url) {
  static const std::regex kAbsolute(R"(^([A-Za-z][A-Za-z0-9+.\-]*)://([^/?#\s]+)([^\s]*)$)");
  std::string text = trim(url);
  std::smatch m;
  if (text.empty() || !std::regex_match(text, m, kAbsolute)) {
    fail(ErrorCode::InvalidUrl, "not an absolute URL: '" + std::string(url) + "'");
  }
  std::string rest = m[3].str();
  if (auto hash = rest.find('#'); hash != std::string::npos) rest.erase(hash);
  return lower(m[1].str()) + "://" + lower(m[2].str()) + rest;
}

std::string UrlParts::origin() const {
  return scheme + "://" + host + (port ? ":" + std::to_string(*port) : std::string{});
}

UrlParts split_url(std::string_view url) {
  std::string normalized = validate_candidate_link(url);
  UrlParts parts;
  auto sep = normalized.find("://");
  parts.scheme = normalized.substr(0, sep);
  std::string rest = normalized.substr(sep + 3);
  auto slash = rest.find_first_of("/?");
  std::string authority = rest.substr(0, slash);
  parts.target = slash == std::string::npos ? "/" : rest.substr(slash);
  if (parts.target.front() == '?') parts.target.insert(0, "/");
  if (auto at = authority.rfind('@'); at != std::string::npos) authority = authority.substr(at + 1);
  if (auto colon = authority.rfind(':'); colon != std::string::npos && authority.find(']') == std::string::npos) {
    try {
      parts.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidUrl, "bad port in '" + std::string(url) + "'");
    }
    authority.erase(colon);
  }
  parts.host = authority;
  return parts;
}

void to_json(json& j, const GarmentSpecSheet& s) {
  json entries = json::object();
  json categories = json::array();
  for (auto c : s.categories) {
    categories.push_back(std::string(to_string(c)));
    const auto& e = s.entry(c);
    entries[std::string(to_string(c))] = {{"full_description", e.full_description},
                                          {"short_description", e.short_description}};
  }
  j = json{{"gender", std::string(to_string(s.gender))},
           {"categories", categories},
           {"entries", entries},
           {"expert_index", s.expert_index}};
}

void from_json(const json& j, GarmentSpecSheet& s) {
  GarmentSpecSheet out;
  auto g = parse_gender(j.at("gender").get<std::string>());
  if (!g) fail(ErrorCode::SchemaViolation, "bad gender");
  out.gender = *g;
  for (const auto& name : j.at("categories")) {
    auto c = parse_category(name.get<std::string>());
    if (!c) fail(ErrorCode::SchemaViolation, "unknown category " + name.dump());
    out.categories.push_back(*c);
    const auto& e = j.at("entries").at(std::string(to_string(*c)));
    out.entries[*c] = {e.at("full_description").get<std::string>(), e.at("short_description").get<std::string>()};
  }
  out.expert_index = j.value("expert_index", 1);
  validate(out);
  s = std::move(out);
}

void to_json(json& j, const PromptPair& p) { j = json{{"positive", p.positive}, {"negative", p.negative}}; }

void to_json(json& j, const NegativePromptSet& n) {
  j = json::array();
  for (const auto& p : n.pairs()) j.push_back(p);
}

void to_json(json& j, const SelectedGarment& g) {
  j = json{{"category", std::string(to_string(g.category))},
           {"image_id", g.candidate.image.id},
           {"image_url", g.candidate.image_url},
           {"link", g.candidate.source_link},
           {"has_model", g.candidate.has_model},
           {"full_description", g.full_description},
           {"short_description", g.short_description},
           {"final_score", g.final_score},
           {"iterations_used", g.iterations_used},
           {"satisfied", g.satisfied},
           {"negatives", g.negatives},
           {"queries", g.queries},
           {"round_scores", g.round_scores}};
}

void to_json(json& j, const OutfitProposal& o) {
  j = json{{"spec", o.spec}, {"garments", o.garments}, {"outfit_score", o.outfit_score}, {"accepted", o.accepted}};
}

void to_json(json& j, const TryOnStage& s) {
  json rounds = json::array();
  for (const auto& r : s.rounds) {
    json round{{"candidates", r.candidate_ids}, {"similarities", r.similarities}};
    round["chosen"] = r.chosen ? json(*r.chosen) : json(nullptr);
    if (!r.error.empty()) round["error"] = r.error;
    rounds.push_back(std::move(round));
  }
  j = json{{"category", std::string(to_string(s.category))},
           {"input_image", s.input_image.id},
           {"garment_image", s.garment_image_id},
           {"chosen_image", s.chosen_image.id},
           {"masked_similarity", s.masked_similarity},
           {"regenerations", s.regenerations},
           {"satisfied", s.satisfied},
           {"negatives", s.negatives},
           {"rounds", rounds}};
}

void to_json(json& j, const TryOnState& s) {
  j = json{{"stages", s.stages}, {"final_image", s.current_image.id}};
}

void to_json(json& j, const ArtistReport& a) {
  j = json{{"design", a.design}, {"fitness", a.fitness}, {"coherence", a.coherence},
           {"mood", a.mood},     {"overall", a.overall}, {"comments", a.comments}};
}

void to_json(json& j, const EvaluationReport& e) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = json{{"style_consistency", opt(e.style_consistency)},
           {"visual_quality", opt(e.visual_quality)},
           {"face_similarity", opt(e.face_similarity)},
           {"artist", e.artist ? json(*e.artist) : json(nullptr)},
           {"person_description", e.person_description ? json(*e.person_description) : json(nullptr)},
           {"notes", e.notes}};
}

}  // namespace wardrobe
