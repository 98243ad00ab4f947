#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/backend.hpp"
#include "dsim/error.hpp"
#include "dsim/rubrics.hpp"
#include "dsim/util.hpp"

namespace dsim {

struct EvidenceSpan {
  std::string snippet;             // judge's quoted span ("conversation"/"summary")
  bool addresses = false;          // "addresses" or "match" flag
  std::optional<std::string> issue;
  std::optional<std::string> reference;  // group-B reference span, when given
  bool operator==(const EvidenceSpan&) const = default;
};

struct CriterionScore {
  double score = 0.0;  // always within [1.0, 5.0] once parsed
  std::string justification;
  std::vector<EvidenceSpan> evidence;
  bool operator==(const CriterionScore&) const = default;
};

struct RubricScore {
  RubricId rubric_id = RubricId::language_delivery;
  // Criterion order mirrors RubricDef.criteria for stable serialization.
  std::vector<std::pair<std::string, CriterionScore>> per_criterion;
  double aggregate = 0.0;  // recomputed locally, never judge-supplied
  int parse_attempts = 1;
  std::vector<std::string> warnings;

  const CriterionScore* find(const std::string& criterion) const {
    for (const auto& [name, cs] : per_criterion)
      if (name == criterion) return &cs;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Prompt assembly

using JudgeInputs = std::map<std::string, std::string>;

// Splits a template into its [[SYSTEM]] and [[USER]] sections and fills the
// slots. Missing required inputs surface as ConfigError naming the slot.
inline std::vector<ChatMessage> build_judge_prompt(const RubricDef& rubric,
                                                   const JudgeInputs& inputs) {
  const std::string& tmpl = rubric.prompt_template;
  const std::string sys_tag = "[[SYSTEM]]";
  const std::string user_tag = "[[USER]]";
  auto sys_pos = tmpl.find(sys_tag);
  auto user_pos = tmpl.find(user_tag);
  if (sys_pos == std::string::npos || user_pos == std::string::npos ||
      user_pos < sys_pos)
    throw ConfigError(std::string("rubric template for ") +
                      to_string(rubric.rubric_id) +
                      " must contain [[SYSTEM]] followed by [[USER]]");
  std::string system_text =
      trim(tmpl.substr(sys_pos + sys_tag.size(), user_pos - sys_pos - sys_tag.size()));
  std::string user_text = trim(tmpl.substr(user_pos + user_tag.size()));

  std::vector<std::pair<std::string, std::string>> slots(inputs.begin(), inputs.end());
  return {{"system", substitute_slots(system_text, slots)},
          {"user", substitute_slots(user_text, slots)}};
}

// ---------------------------------------------------------------------------
// Response parsing

namespace detail {

inline EvidenceSpan evidence_from_json(const nlohmann::json& j,
                                       const std::string& criterion) {
  if (!j.is_object())
    throw ParseError("evidence entry for '" + criterion + "' must be an object");
  EvidenceSpan span;
  if (j.contains("conversation") && j["conversation"].is_string())
    span.snippet = j["conversation"].get<std::string>();
  else if (j.contains("summary") && j["summary"].is_string())
    span.snippet = j["summary"].get<std::string>();
  else if (j.contains("snippet") && j["snippet"].is_string())
    span.snippet = j["snippet"].get<std::string>();
  else
    throw ParseError("evidence entry for '" + criterion + "' lacks a text span");
  if (j.contains("addresses") && j["addresses"].is_boolean())
    span.addresses = j["addresses"].get<bool>();
  else if (j.contains("match") && j["match"].is_boolean())
    span.addresses = j["match"].get<bool>();
  else
    throw ParseError("evidence entry for '" + criterion +
                     "' lacks a boolean addresses/match flag");
  if (j.contains("issue") && j["issue"].is_string())
    span.issue = j["issue"].get<std::string>();
  if (j.contains("reference") && j["reference"].is_string())
    span.reference = j["reference"].get<std::string>();
  return span;
}

}  // namespace detail

// Extracts the first JSON object from judge output (judges wrap output in
// prose and fences), validates it against the rubric, and recomputes the
// aggregate locally. Throws ParseError with a repairable reason on any
// violation.
inline RubricScore parse_rubric_response(const std::string& text,
                                         const RubricDef& rubric) {
  auto object_text = extract_first_json_object(text);
  if (!object_text) throw ParseError("no JSON object found in judge output");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(*object_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("judge output is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("judge output is not a JSON object");

  RubricScore result;
  result.rubric_id = rubric.rubric_id;
  double sum = 0.0;
  for (const auto& criterion : rubric.criteria) {
    if (!doc.contains(criterion))
      throw ParseError("missing criterion '" + criterion + "'");
    const auto& entry = doc[criterion];
    if (!entry.is_object())
      throw ParseError("criterion '" + criterion + "' must be an object");
    if (!entry.contains("score") || !entry["score"].is_number())
      throw ParseError("criterion '" + criterion + "' lacks a numeric score");
    double score = entry["score"].get<double>();
    if (!(score >= 1.0 && score <= 5.0))
      throw ParseError("score out of bounds for '" + criterion + "': " +
                       std::to_string(score) + " (must be within [1.0, 5.0])");
    if (!entry.contains("justification") || !entry["justification"].is_string())
      throw ParseError("criterion '" + criterion + "' lacks a justification string");

    CriterionScore cs;
    cs.score = score;
    cs.justification = entry["justification"].get<std::string>();
    if (rubric.requires_evidence) {
      if (!entry.contains("evidence") || !entry["evidence"].is_array())
        throw ParseError("criterion '" + criterion + "' lacks an evidence list");
      for (const auto& item : entry["evidence"])
        cs.evidence.push_back(detail::evidence_from_json(item, criterion));
    }
    sum += score;
    result.per_criterion.emplace_back(criterion, std::move(cs));
  }
  result.aggregate = sum / static_cast<double>(rubric.criteria.size());

  // The judge's own average is kept only to detect arithmetic drift.
  if (doc.contains(rubric.aggregate_key) && doc[rubric.aggregate_key].is_number()) {
    double reported = doc[rubric.aggregate_key].get<double>();
    if (std::fabs(reported - result.aggregate) > 0.05)
      result.warnings.push_back(
          "judge-reported aggregate " + std::to_string(reported) +
          " differs from recomputed mean " + std::to_string(result.aggregate));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation loop

struct RubricOutcome {
  std::optional<RubricScore> score;  // empty = all attempts failed
  std::optional<std::string> error;
  int attempts = 0;
};

// Calls the judge, re-prompting with the parse failure appended until the
// output validates or attempts are exhausted. Backend faults surface in the
// outcome as errors, like exhaustion, so a dead judge never kills the run.
inline RubricOutcome evaluate_rubric(const RubricDef& rubric, const JudgeInputs& inputs,
                                     ChatBackend& judge_backend,
                                     const std::string& judge_model,
                                     std::uint64_t seed, int max_attempts = 3) {
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  ChatRequest request;
  request.model = judge_model;
  request.temperature = 0.0;
  request.seed = seed;
  request.messages = build_judge_prompt(rubric, inputs);

  RubricOutcome outcome;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    outcome.attempts = attempt;
    std::string content;
    try {
      content = judge_backend.complete(request).content;
    } catch (const TransportError& e) {
      outcome.error = e.what();
      return outcome;
    } catch (const ProviderError& e) {
      outcome.error = e.what();
      return outcome;
    } catch (const ParseError& e) {  // malformed completion envelope
      outcome.error = e.what();
      return outcome;
    }
    try {
      RubricScore score = parse_rubric_response(content, rubric);
      score.parse_attempts = attempt;
      outcome.score = std::move(score);
      return outcome;
    } catch (const ParseError& e) {
      last_error = e.what();
      request.messages.push_back({"assistant", content});
      request.messages.push_back(
          {"user", std::string("Your output could not be parsed: ") + last_error +
                       ". Reply again with only the corrected JSON object in the "
                       "required format."});
    }
  }
  outcome.error = "judge output unparseable after " +
                  std::to_string(outcome.attempts) + " attempts: " + last_error;
  return outcome;
}

// ---------------------------------------------------------------------------
// Wire format: same shape the judge is asked to produce, so a stored score
// can be re-parsed by parse_rubric_response.

inline nlohmann::json to_json(const EvidenceSpan& span, bool group_b_shape) {
  nlohmann::json j;
  if (group_b_shape) {
    j["summary"] = span.snippet;
    if (span.reference) j["reference"] = *span.reference;
    j["match"] = span.addresses;
  } else {
    j["conversation"] = span.snippet;
    j["addresses"] = span.addresses;
  }
  if (span.issue) j["issue"] = *span.issue;
  return j;
}

inline nlohmann::json rubric_score_to_json(const RubricScore& score,
                                           const RubricDef& def) {
  nlohmann::json doc = nlohmann::json::object();
  const bool group_b = def.rubric_id == RubricId::summary_group_b;
  for (const auto& [criterion, cs] : score.per_criterion) {
    nlohmann::json entry = {{"score", cs.score}, {"justification", cs.justification}};
    if (def.requires_evidence) {
      nlohmann::json evidence = nlohmann::json::array();
      for (const auto& span : cs.evidence) evidence.push_back(to_json(span, group_b));
      entry["evidence"] = evidence;
    }
    doc[criterion] = std::move(entry);
  }
  doc[def.aggregate_key] = score.aggregate;
  return doc;
}

}  // namespace dsim
