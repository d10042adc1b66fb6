#include "wardrobe/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "wardrobe/errors.hpp"

namespace wardrobe {

namespace assets {
const std::map<std::string, std::string_view>& embedded_assets();
}

namespace {

constexpr std::string_view kUserMarker = "=== user ===";

const std::regex& placeholder_pattern() {
  static const std::regex re(R"(\{\{\s*([^{}]*?)\s*\}\})");
  return re;
}

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

void collect_args(const std::string& text, std::set<std::string>& out) {
  for (auto it = std::sregex_iterator(text.begin(), text.end(), placeholder_pattern()); it != std::sregex_iterator(); ++it) {
    out.insert((*it)[1].str());
  }
}

std::string substitute(const std::string& text, const PromptArgs& args) {
  std::string out;
  auto last = text.cbegin();
  for (auto it = std::sregex_iterator(text.begin(), text.end(), placeholder_pattern()); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(last, m[0].first);
    out += args.find(m[1].str())->second;
    last = m[0].second;
  }
  out.append(last, text.cend());
  return out;
}

}  // namespace

std::string RenderedPrompt::text() const { return system.empty() ? user : system + "\n\n" + user; }

PromptTemplate parse_template(std::string id, std::string_view asset_text) {
  PromptTemplate t;
  t.id = std::move(id);
  std::string text(asset_text);
  auto marker = text.find(std::string(kUserMarker) + "\n");
  if (marker != std::string::npos && (marker == 0 || text[marker - 1] == '\n')) {
    t.system = rstrip(text.substr(0, marker));
    t.user = rstrip(text.substr(marker + kUserMarker.size() + 1));
  } else {
    t.user = rstrip(text);
  }
  std::set<std::string> args;
  collect_args(t.system, args);
  collect_args(t.user, args);
  t.required_args.assign(args.begin(), args.end());
  return t;
}

const PromptRegistry& PromptRegistry::builtin() {
  static const PromptRegistry registry = [] {
    PromptRegistry r;
    for (const auto& [name, bytes] : assets::embedded_assets()) {
      std::filesystem::path p(name);
      if (p.extension() == ".txt") r.add(parse_template(p.stem().string(), bytes));
    }
    return r;
  }();
  return registry;
}

const std::map<std::string, std::string_view>& embedded_prompt_assets() { return assets::embedded_assets(); }

PromptRegistry PromptRegistry::from_directory(const std::filesystem::path& dir) {
  PromptRegistry r;
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::ConfigError, "prompt directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    r.add(parse_template(entry.path().stem().string(), buf.str()));
  }
  return r;
}

void PromptRegistry::add(PromptTemplate tmpl) {
  std::string id = tmpl.id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

const PromptTemplate& PromptRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) fail(ErrorCode::UnknownTemplate, "unknown template '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> PromptRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

RenderedPrompt PromptRegistry::render(std::string_view id, const PromptArgs& args) const {
  const auto& t = get(id);
  for (const auto& name : t.required_args) {
    if (args.find(name) == args.end()) fail(ErrorCode::MissingArg, name);
  }
  for (const auto& [name, _] : args) {
    if (!std::binary_search(t.required_args.begin(), t.required_args.end(), name)) fail(ErrorCode::ExtraArg, name);
  }
  return RenderedPrompt{substitute(t.system, args), substitute(t.user, args)};
}

}  // namespace wardrobe
