#include "wardrobe/critic.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

namespace wardrobe {
namespace {

constexpr std::string_view kOpenTag = "<person description>";
constexpr std::string_view kCloseTag = "</person description>";

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::size_t word_count(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

int rating(const json& reply, const std::string& key) {
  auto it = reply.find(key);
  if (it == reply.end()) fail(ErrorCode::ArtistParseFailed, "missing \"" + key + "\"");
  double value = 0.0;
  if (it->is_number()) {
    value = it->get<double>();
  } else if (it->is_string()) {
    try {
      std::size_t used = 0;
      value = std::stod(it->get<std::string>(), &used);
    } catch (const std::exception&) {
      fail(ErrorCode::ArtistParseFailed, "\"" + key + "\" is not a number");
    }
  } else {
    fail(ErrorCode::ArtistParseFailed, "\"" + key + "\" is not a number");
  }
  if (value != std::floor(value)) fail(ErrorCode::ArtistParseFailed, "\"" + key + "\" is not an integer");
  if (value < 1 || value > 10) {
    fail(ErrorCode::SubScoreOutOfRange, "\"" + key + "\" = " + std::to_string(value) + " outside [1,10]");
  }
  return static_cast<int>(value);
}

}  // namespace

std::string extract_person_description(std::string_view reply) {
  auto open = reply.find(kOpenTag);
  if (open == std::string_view::npos) fail(ErrorCode::DescribeFailed, "reply has no person description tag");
  auto start = open + kOpenTag.size();
  auto close = reply.find(kCloseTag, start);
  if (close == std::string_view::npos) fail(ErrorCode::DescribeFailed, "person description tag is not closed");
  std::string text(reply.substr(start, close - start));
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) fail(ErrorCode::DescribeFailed, "person description is empty");
  text = text.substr(first, text.find_last_not_of(" \t\r\n") - first + 1);
  return text;
}

ArtistReport parse_artist_reply(std::string_view reply) {
  json j;
  try {
    j = extract_json_object(reply);
  } catch (const Error& e) {
    fail(ErrorCode::ArtistParseFailed, e.what());
  }
  ArtistReport r;
  r.design = rating(j, "design rating");
  r.fitness = rating(j, "fit rating");
  r.coherence = rating(j, "coherence rating");
  r.mood = rating(j, "mood rating");
  r.overall = (r.design + r.fitness + r.coherence + r.mood) / 4.0;
  for (const char* key : {"design", "fit", "coherence", "mood", "overall comment"}) {
    if (j.contains(key) && j[key].is_string()) r.comments[key] = j[key].get<std::string>();
  }
  if (j.contains("overall rating")) {
    const auto& reported = j["overall rating"];
    r.comments["reported overall rating"] = reported.is_string() ? reported.get<std::string>() : reported.dump();
    if (reported.is_number() && std::abs(reported.get<double>() - r.overall) > 1e-9) {
      spdlog::info("artist reported overall {} but sub-scores average {}", reported.dump(), r.overall);
    }
  }
  return r;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  require(!a.empty() && a.size() == b.size(), "embeddings must be non-empty and of equal length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, "zero embedding");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

Critic::Critic(Ports& ports, CriticConfig config, const PromptRegistry& prompts)
    : ports_(ports), config_(std::move(config)), prompts_(prompts) {
  if (config_.artist.empty()) config_.artist = config_.describer;
}

std::string Critic::describe_person(const Image& image) {
  auto prompt = prompts_.render(prompt_ids::kPersonDescriber, {});
  auto text = extract_person_description(
      ports_.vlm_chat(config_.describer, prompt.system, prompt.user, {image}, {Phase::critic, "describe_person", {}}));
  auto words = word_count(text);
  if (words < 50 || words > 100) spdlog::info("person description has {} words", words);
  return text;
}

double Critic::style_consistency(const Image& final_image, const std::string& person_description,
                                 const std::string& preference) {
  require(!blank(person_description), "person description is empty");
  require(!blank(preference), "preference is empty");
  return ports_.vqa_score(final_image, person_description + " " + preference,
                          {Phase::critic, "style_consistency", {}});
}

double Critic::visual_quality(const Image& final_image) {
  return ports_.iqa_score(final_image, {Phase::critic, "visual_quality", {}});
}

std::optional<double> Critic::face_similarity(const Image& original, const Image& final_image) {
  try {
    auto a = ports_.face_embed(original, {Phase::critic, "face_similarity", "original"});
    auto b = ports_.face_embed(final_image, {Phase::critic, "face_similarity", "final"});
    return cosine_similarity(a, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoFaceFound) return std::nullopt;
    throw;
  }
}

ArtistReport Critic::vlm_artist(const Image& final_image) {
  auto prompt = prompts_.render(prompt_ids::kArtistRubric, {});
  return parse_artist_reply(
      ports_.vlm_chat(config_.artist, prompt.system, prompt.user, {final_image}, {Phase::critic, "artist", {}}));
}

EvaluationReport Critic::evaluate(const UserRequest& request, const Image& final_image) {
  EvaluationReport report;
  auto guard = [&](const char* metric, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      spdlog::warn("{} unavailable: {}", metric, e.what());
      report.notes[metric] = e.what();
    }
  };

  guard("style_consistency", [&] {
    try {
      report.person_description = describe_person(request.user_image);
    } catch (const std::exception& e) {
      report.notes["person_description"] = e.what();
      throw;
    }
    report.style_consistency = style_consistency(final_image, *report.person_description, request.preference_text);
  });
  guard("visual_quality", [&] { report.visual_quality = visual_quality(final_image); });
  guard("face_similarity", [&] {
    report.face_similarity = face_similarity(request.user_image, final_image);
    if (!report.face_similarity) report.notes["face_similarity"] = "no face found";
  });
  guard("artist", [&] { report.artist = vlm_artist(final_image); });
  return report;
}

}  // namespace wardrobe
