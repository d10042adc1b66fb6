#include "wardrobe/designer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

namespace wardrobe {
namespace {

bool is_expert_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::SpecParseFailed:
    case ErrorCode::NoCandidates:
    case ErrorCode::ZeroScore:
    case ErrorCode::BackendUnavailable:
    case ErrorCode::Timeout:
    case ErrorCode::EmptyReply:
      return true;
    default:
      return false;
  }
}

bool starts_with_yes(const std::string& reply) {
  std::string word;
  for (char c : reply) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!word.empty()) {
      break;
    }
  }
  return word == "yes";
}

}  // namespace

void ExpertPool::validate() const {
  require(!experts.empty(), "expert pool is empty");
  double sum = 0.0;
  for (const auto& e : experts) {
    require(!e.backend_id.empty(), "expert without backend id");
    require(e.weight >= 0.0, "expert weights must be non-negative");
    sum += e.weight;
  }
  require(std::abs(sum - 1.0) < 1e-9, "expert weights must sum to 1");
}

ExpertPool ExpertPool::ranked(const std::vector<std::string>& backend_ids) {
  static const std::vector<double> kPaperWeights{0.4, 0.3, 0.2, 0.1};
  ExpertPool pool;
  if (backend_ids.size() == kPaperWeights.size()) {
    for (std::size_t i = 0; i < backend_ids.size(); ++i) pool.experts.push_back({backend_ids[i], kPaperWeights[i]});
  } else {
    for (const auto& id : backend_ids) pool.experts.push_back({id, 1.0 / static_cast<double>(backend_ids.size())});
  }
  return pool;
}

CategoryThresholds default_item_thresholds() {
  return {{GarmentCategory::upper_body, 0.7}, {GarmentCategory::lower_body, 0.7}, {GarmentCategory::dress, 0.7},
          {GarmentCategory::shoes, 0.6},      {GarmentCategory::hat, 0.6},        {GarmentCategory::glasses, 0.6},
          {GarmentCategory::belt, 0.6},       {GarmentCategory::scarf, 0.6}};
}

void DesignerConfig::validate() const {
  for (auto c : kAllCategories) {
    auto it = tau.find(c);
    require(it != tau.end(), "tau missing for " + std::string(to_string(c)));
    require(it->second > 0.0 && it->second <= 1.0, "tau must be in (0,1]");
  }
  require(omega > 0.0 && omega <= 1.0, "omega must be in (0,1]");
  require(item_max_iterations >= 1, "item max iterations must be >= 1");
  require(search_num >= 1 && search_num <= 10, "search_num must be in [1,10]");
}

std::string build_search_query(const std::string& description, const NegativePromptSet& negatives) {
  require(description.find_first_not_of(" \t\r\n") != std::string::npos, "description is empty");
  std::string query = description;
  for (const auto& phrase : negatives.negatives()) query += " -\"" + phrase + "\"";
  return query;
}

double score_outfit(const std::vector<double>& scores, const std::vector<double>& thresholds, bool allow_zero) {
  require(!scores.empty(), "score_outfit needs at least one score");
  require(scores.size() == thresholds.size(), "scores and thresholds differ in length");
  double log_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(scores[i] >= 0.0 && scores[i] <= 1.0, "scores must lie in [0,1]");
    require(thresholds[i] > 0.0 && thresholds[i] <= 1.0, "thresholds must lie in (0,1]");
    if (scores[i] == 0.0) {
      if (allow_zero) return 0.0;
      fail(ErrorCode::ZeroScore, "garment " + std::to_string(i) + " scored 0");
    }
    log_sum += std::log(std::min(scores[i] / thresholds[i], 1.0));
  }
  return std::exp(log_sum / static_cast<double>(scores.size()));
}

void to_json(json& j, const ExpertAttempt& a) {
  j = json{{"expert_index", a.expert_index},
           {"backend_id", a.backend_id},
           {"outfit_score", a.outfit_score ? json(*a.outfit_score) : json(nullptr)},
           {"accepted", a.accepted},
           {"sheet", a.sheet ? json(*a.sheet) : json(nullptr)}};
  if (!a.error.empty()) j["error"] = a.error;
}

Designer::Designer(Ports& ports, DesignerConfig config, const PromptRegistry& prompts)
    : ports_(ports), config_(std::move(config)), prompts_(prompts) {
  config_.validate();
  if (config_.model_check_backend.empty()) config_.model_check_backend = config_.item_diagnoser;
}

GarmentSpecSheet Designer::interpret_style(const UserRequest& request, const std::string& expert, int expert_index,
                                           const std::vector<GarmentSpecSheet>& rejected) {
  RenderedPrompt prompt;
  if (rejected.empty()) {
    prompt = prompts_.render(prompt_ids::kInterpreterFirst,
                             {{std::string(prompt_args::kDescription), request.preference_text}});
  } else {
    json examples = json::array();
    for (const auto& sheet : rejected) examples.push_back(to_reply_json(sheet));
    prompt = prompts_.render(prompt_ids::kInterpreterRetry,
                             {{std::string(prompt_args::kDescription), request.preference_text},
                              {std::string(prompt_args::kNegativeExamples), examples.dump()}});
  }
  CallContext ctx{Phase::designer, "interpret", {}};
  // A reply with no JSON at all gets one more chance; schema problems do not.
  for (int attempt = 1;; ++attempt) {
    std::string reply = ports_.vlm_chat(expert, prompt.system, prompt.user, {request.user_image}, ctx);
    try {
      return parse_spec_sheet(reply, expert_index);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedJson && attempt == 1) {
        spdlog::warn("expert {} replied without JSON; asking again", expert);
        continue;
      }
      fail(ErrorCode::SpecParseFailed, "expert " + expert + ": " + e.what());
    }
  }
}

std::optional<Attempt<GarmentCandidate>> Designer::search_round(GarmentCategory category,
                                                                const std::string& description,
                                                                const NegativePromptSet& negatives,
                                                                std::vector<std::string>& queries) {
  const std::string subject(to_string(category));
  std::string query = build_search_query(description, negatives);
  queries.push_back(query);
  std::vector<SearchHit> hits;
  try {
    hits = ports_.search(query, config_.search_num, {Phase::designer, "item_search", subject});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoResults) throw;
    spdlog::info("search for {} returned no results: {}", subject, e.what());
    return std::nullopt;
  }

  std::set<std::string> seen;
  std::optional<Attempt<GarmentCandidate>> best;
  for (const auto& hit : hits) {
    std::string image_url, page_url;
    try {
      image_url = validate_candidate_link(hit.image_url);
      page_url = validate_candidate_link(hit.page_url);
    } catch (const Error&) {
      spdlog::info("skipping result with invalid link {} / {}", hit.image_url, hit.page_url);
      continue;
    }
    if (!seen.insert(image_url).second) continue;
    auto downloaded = ports_.download(hit.image_url, {Phase::designer, "item_download", subject});
    if (!downloaded) continue;
    double score = ports_.vqa_score(*downloaded, description, {Phase::designer, "item_score", subject});
    if (!best || score > best->score) {
      best = Attempt<GarmentCandidate>{GarmentCandidate{std::move(*downloaded), image_url, page_url, score, false}, score};
    }
  }
  return best;
}

bool Designer::garment_shows_model(GarmentCategory category, const Image& garment) {
  if (!config_.detect_garment_model) return false;
  auto prompt = prompts_.render(prompt_ids::kGarmentHasModel, {});
  try {
    return starts_with_yes(ports_.vlm_chat(config_.model_check_backend, prompt.system, prompt.user, {garment},
                                           {Phase::designer, "garment_model_check", std::string(to_string(category))}));
  } catch (const Error& e) {
    spdlog::warn("model check for {} failed, assuming a flat product image: {}", to_string(category), e.what());
    return false;
  }
}

SelectedGarment Designer::acquire_garment(GarmentCategory category, const GarmentDescription& description) {
  const std::string subject(to_string(category));
  LoopConfig loop{config_.tau.at(category), config_.item_max_iterations, config_.item_diagnoser};
  std::vector<std::string> queries;

  Generator<GarmentCandidate> generate = [&](const NegativePromptSet& negatives, int) {
    return search_round(category, description.full_description, negatives, queries);
  };
  Diagnoser<GarmentCandidate> diagnose = [&](const GarmentCandidate& candidate) {
    auto prompt = prompts_.render(prompt_ids::kSearchDiagnoser,
                                  {{std::string(prompt_args::kDescription), description.full_description}});
    return parse_prompt_pairs(ports_.vlm_chat(config_.item_diagnoser, prompt.system, prompt.user, {candidate.image},
                                              {Phase::designer, "item_diagnose", subject}));
  };

  LoopOutcome<GarmentCandidate> outcome;
  try {
    outcome = run_feedback_loop(generate, diagnose, loop);
  } catch (const GeneratorFailed<GarmentCandidate>& e) {
    std::rethrow_exception(e.cause());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoUsableResult) {
      fail(ErrorCode::NoCandidates, subject + ": no usable candidate after " + std::to_string(queries.size()) +
                                        " search rounds");
    }
    throw;
  }

  SelectedGarment g;
  g.category = category;
  g.candidate = std::move(outcome.best_value);
  g.candidate.has_model = garment_shows_model(category, g.candidate.image);
  g.full_description = description.full_description;
  g.short_description = description.short_description;
  g.final_score = outcome.best_score;
  g.iterations_used = outcome.iterations_used;
  g.negatives = std::move(outcome.negatives);
  g.satisfied = outcome.satisfied;
  g.queries = std::move(queries);
  for (const auto& s : outcome.scores) g.round_scores.push_back(s.value_or(-1.0));
  return g;
}

DesignerResult Designer::run(const UserRequest& request, const ExpertPool& pool) {
  pool.validate();
  DesignerResult result;
  std::vector<GarmentSpecSheet> rejected;
  std::optional<std::size_t> best;

  for (std::size_t i = 0; i < pool.experts.size(); ++i) {
    ExpertAttempt attempt;
    attempt.expert_index = static_cast<int>(i) + 1;
    attempt.backend_id = pool.experts[i].backend_id;
    try {
      auto sheet = interpret_style(request, attempt.backend_id, attempt.expert_index, rejected);
      attempt.sheet = sheet;
      OutfitProposal proposal;
      proposal.spec = sheet;
      std::vector<double> scores, thresholds;
      for (auto category : sheet.categories) {
        proposal.garments.push_back(acquire_garment(category, sheet.entry(category)));
        scores.push_back(proposal.garments.back().final_score);
        thresholds.push_back(config_.tau.at(category));
      }
      proposal.outfit_score = score_outfit(scores, thresholds, config_.allow_zero_score);
      proposal.accepted = proposal.outfit_score >= config_.omega;
      attempt.outfit_score = proposal.outfit_score;
      attempt.accepted = proposal.accepted;
      spdlog::info("expert {} ({}) outfit score {:.4f} (omega {:.2f})", attempt.expert_index, attempt.backend_id,
                   proposal.outfit_score, config_.omega);
      result.attempts.push_back(attempt);
      result.proposals.push_back(proposal);
      if (proposal.accepted) {
        result.proposal = std::move(proposal);
        return result;
      }
      if (!best || proposal.outfit_score > result.proposals[*best].outfit_score) best = result.proposals.size() - 1;
      rejected.push_back(std::move(sheet));
    } catch (const Error& e) {
      if (!is_expert_failure(e.code())) throw;
      spdlog::warn("expert {} ({}) failed: {}", attempt.expert_index, attempt.backend_id, e.what());
      attempt.error = e.what();
      if (attempt.sheet) rejected.push_back(*attempt.sheet);
      result.attempts.push_back(std::move(attempt));
    }
  }
  if (!best) fail(ErrorCode::AllExpertsFailed, "none of " + std::to_string(pool.experts.size()) + " experts produced an outfit");
  result.proposal = result.proposals[*best];
  return result;
}

}  // namespace wardrobe
