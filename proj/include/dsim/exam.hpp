#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/artifacts.hpp"
#include "dsim/backend.hpp"
#include "dsim/engine.hpp"
#include "dsim/error.hpp"
#include "dsim/prompts.hpp"
#include "dsim/scenario.hpp"

namespace dsim {

enum class ExamCondition { dialogue_only, summary_only };

inline const char* to_string(ExamCondition c) {
  return c == ExamCondition::dialogue_only ? "dialogue_only" : "summary_only";
}
inline ExamCondition exam_condition_from_string(std::string_view s) {
  if (s == "dialogue_only") return ExamCondition::dialogue_only;
  if (s == "summary_only") return ExamCondition::summary_only;
  throw ParseError("unknown exam condition: " + std::string(s));
}

struct ExamItem {
  std::string question_id;
  StageId category = StageId::diagnosis;
  std::array<int, 3> presented_order{0, 1, 2};  // presented pos -> original index
  std::optional<int> chosen_index;              // presented pos, empty = unparsed
  bool correct = false;
  bool unparsed = false;
  std::string raw_reply;
  std::optional<std::string> error;  // backend failure for this question
};

struct ExamResult {
  ExamCondition condition = ExamCondition::dialogue_only;
  std::vector<ExamItem> per_question;
  double accuracy = 0.0;
  std::uint64_t seed = 0;
};

// The six orderings of three choices, lexicographic, indexed by a seeded hash.
inline const std::array<std::array<int, 3>, 6>& choice_permutations() {
  static const std::array<std::array<int, 3>, 6> kPerms = {{
      {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  return kPerms;
}

// Stable per-question permutation: depends on run seed, condition, and
// question id, nothing else.
inline std::array<int, 3> presented_order_for(std::uint64_t seed,
                                              ExamCondition condition,
                                              const std::string& question_id) {
  std::uint64_t h = fnv1a64(std::to_string(seed));
  h = fnv1a64("exam", h);
  h = fnv1a64(to_string(condition), h);
  h = fnv1a64(question_id, h);
  return choice_permutations()[h % 6];
}

// Maps a free-text reply to a presented choice position, or nullopt when the
// reply is ambiguous or unrecognizable. Accepts a leading or isolated option
// letter, else an exact full-text match of one presented choice.
inline std::optional<int> parse_choice(const std::string& reply,
                                       const std::vector<std::string>& presented_texts) {
  std::vector<std::string> tokens = tokenize(reply);
  auto letter_index = [](const std::string& token) -> std::optional<int> {
    if (token.size() != 1) return std::nullopt;
    if (token[0] >= 'a' && token[0] <= 'c') return token[0] - 'a';
    return std::nullopt;
  };
  if (!tokens.empty()) {
    if (auto idx = letter_index(tokens.front())) return idx;
  }
  std::set<int> distinct;
  for (const auto& token : tokens)
    if (auto idx = letter_index(token)) distinct.insert(*idx);
  if (distinct.size() == 1) return *distinct.begin();
  if (distinct.size() > 1) return std::nullopt;
  // No letters at all: accept a verbatim restatement of exactly one choice.
  std::string normalized = normalize_text(reply);
  std::optional<int> match;
  for (std::size_t i = 0; i < presented_texts.size(); ++i) {
    if (normalize_text(presented_texts[i]) == normalized) {
      if (match) return std::nullopt;
      match = static_cast<int>(i);
    }
  }
  return match;
}

// ---------------------------------------------------------------------------

// Core exam loop over an already-rendered context. The patient sees only the
// persona and the condition's context, never the gold record. One backend
// call per question; a failed call marks that question unparsed/incorrect
// with an error annotation and the exam continues.
inline ExamResult administer_exam_text(const std::vector<ExamQuestion>& questions,
                                       ExamCondition condition,
                                       const std::string& context_label,
                                       const std::string& context_text,
                                       const PatientProfile& profile,
                                       ChatBackend& patient_backend,
                                       const PromptLibrary& prompts,
                                       const std::string& patient_model,
                                       std::uint64_t seed,
                                       double temperature = 0.0) {
  if (questions.empty()) throw ValidationError("exam requires at least one question");
  ExamResult result;
  result.condition = condition;
  result.seed = seed;

  const std::string system = prompts.render(
      "exam_system", {{"persona", persona_directives(profile)}});

  std::size_t n = std::min<std::size_t>(questions.size(), 10);
  for (std::size_t qi = 0; qi < n; ++qi) {
    const ExamQuestion& q = questions[qi];
    ExamItem item;
    item.question_id = q.question_id;
    item.category = q.category;
    item.presented_order = presented_order_for(seed, condition, q.question_id);

    std::vector<std::string> presented_texts;
    for (int pos = 0; pos < 3; ++pos)
      presented_texts.push_back(q.choices[item.presented_order[pos]].text);

    std::string user = prompts.render(
        "exam_question", {{"context_label", context_label},
                          {"context", context_text},
                          {"stem", q.stem},
                          {"choice_a", presented_texts[0]},
                          {"choice_b", presented_texts[1]},
                          {"choice_c", presented_texts[2]}});

    ChatRequest request;
    request.model = patient_model;
    request.temperature = temperature;
    request.seed = seed;
    request.messages.push_back({"system", system});
    request.messages.push_back({"user", user});

    try {
      ChatResponse response = patient_backend.complete(request);
      item.raw_reply = response.content;
      item.chosen_index = parse_choice(response.content, presented_texts);
    } catch (const TransportError& e) {
      item.error = e.what();
    } catch (const ProviderError& e) {
      item.error = e.what();
    } catch (const ParseError& e) {
      item.error = e.what();
    }

    if (item.chosen_index) {
      int original = item.presented_order[*item.chosen_index];
      item.correct = q.choices[original].role == ChoiceRole::answer;
    } else {
      item.unparsed = true;
      item.correct = false;
    }
    result.per_question.push_back(std::move(item));
  }

  int n_correct = 0;
  for (const auto& item : result.per_question) n_correct += item.correct;
  result.accuracy = static_cast<double>(n_correct) /
                    static_cast<double>(result.per_question.size());
  return result;
}

inline ExamResult administer_exam(const std::vector<ExamQuestion>& questions,
                                  ExamCondition condition, const Transcript& context,
                                  const PatientProfile& profile,
                                  ChatBackend& patient_backend,
                                  const PromptLibrary& prompts,
                                  const std::string& patient_model, std::uint64_t seed,
                                  double temperature = 0.0) {
  if (condition != ExamCondition::dialogue_only)
    throw ValidationError("transcript context requires the dialogue_only condition");
  return administer_exam_text(questions, condition,
                              "The conversation you had with your doctor at discharge",
                              transcript_to_text(context), profile, patient_backend,
                              prompts, patient_model, seed, temperature);
}

inline ExamResult administer_exam(const std::vector<ExamQuestion>& questions,
                                  ExamCondition condition, const SummaryResult& context,
                                  const PatientProfile& profile,
                                  ChatBackend& patient_backend,
                                  const PromptLibrary& prompts,
                                  const std::string& patient_model, std::uint64_t seed,
                                  double temperature = 0.0) {
  if (condition != ExamCondition::summary_only)
    throw ValidationError("summary context requires the summary_only condition");
  return administer_exam_text(questions, condition,
                              "Your personalized discharge summary", context.text,
                              profile, patient_backend, prompts, patient_model, seed,
                              temperature);
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ExamResult& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : r.per_question) {
    nlohmann::json j = {{"question_id", item.question_id},
                        {"category", to_string(item.category)},
                        {"presented_order", item.presented_order},
                        {"correct", item.correct},
                        {"unparsed", item.unparsed},
                        {"raw_reply", item.raw_reply}};
    j["chosen_index"] =
        item.chosen_index ? nlohmann::json(*item.chosen_index) : nlohmann::json();
    if (item.error) j["error"] = *item.error;
    items.push_back(std::move(j));
  }
  return {{"condition", to_string(r.condition)},
          {"per_question", items},
          {"accuracy", r.accuracy},
          {"seed", r.seed}};
}

inline ExamResult exam_result_from_json(const nlohmann::json& j) {
  ExamResult r;
  r.condition = exam_condition_from_string(j.at("condition").get<std::string>());
  r.accuracy = j.at("accuracy").get<double>();
  r.seed = j.value("seed", 0ull);
  for (const auto& item_json : j.at("per_question")) {
    ExamItem item;
    item.question_id = item_json.at("question_id").get<std::string>();
    item.category = stage_from_string(item_json.value("category", "diagnosis"));
    auto order = item_json.at("presented_order");
    for (int pos = 0; pos < 3; ++pos) item.presented_order[pos] = order[pos].get<int>();
    if (item_json.contains("chosen_index") && !item_json["chosen_index"].is_null())
      item.chosen_index = item_json["chosen_index"].get<int>();
    item.correct = item_json.at("correct").get<bool>();
    item.unparsed = item_json.value("unparsed", false);
    item.raw_reply = item_json.value("raw_reply", "");
    if (item_json.contains("error")) item.error = item_json["error"].get<std::string>();
    r.per_question.push_back(std::move(item));
  }
  return r;
}

}  // namespace dsim
