#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/backend.hpp"
#include "dsim/engine.hpp"
#include "dsim/error.hpp"
#include "dsim/prompts.hpp"
#include "dsim/scenario.hpp"
#include "dsim/stages.hpp"

namespace dsim {

// Structured checklist: one list of item strings per stage. All six keys are
// always present, possibly with empty lists.
using ChecklistDoc = std::map<StageId, std::vector<std::string>>;

inline ChecklistDoc empty_checklist() {
  ChecklistDoc doc;
  for (StageId s : kAllStages) doc[s];
  return doc;
}

inline nlohmann::json to_json(const ChecklistDoc& doc) {
  nlohmann::json out = nlohmann::json::object();
  for (StageId s : kAllStages) {
    auto it = doc.find(s);
    out[to_string(s)] =
        it == doc.end() ? std::vector<std::string>{} : it->second;
  }
  return out;
}

// JSON Schema for the checklist wire shape; served with the assets and used
// verbatim in docs.
inline const char* kChecklistSchema = R"SCHEMA({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "DischargeChecklist",
  "type": "object",
  "properties": {
    "diagnosis": {"type": "array", "items": {"type": "string"}},
    "tests_and_treatments": {"type": "array", "items": {"type": "string"}},
    "return_indicators": {"type": "array", "items": {"type": "string"}},
    "medications": {"type": "array", "items": {"type": "string"}},
    "post_discharge_treatment": {"type": "array", "items": {"type": "string"}},
    "follow_up": {"type": "array", "items": {"type": "string"}}
  },
  "required": [
    "diagnosis",
    "tests_and_treatments",
    "return_indicators",
    "medications",
    "post_discharge_treatment",
    "follow_up"
  ],
  "additionalProperties": false
}
)SCHEMA";

struct ChecklistParse {
  ChecklistDoc doc;
  std::vector<std::string> warnings;  // e.g. ignored extra keys
};

// Strict parse of model output: all six keys required, values must be arrays
// of strings. Unknown extra keys are ignored with a warning rather than
// failing the run.
inline ChecklistParse checklist_from_json_text(const std::string& text) {
  auto object_text = extract_first_json_object(text);
  if (!object_text)
    throw ParseError("checklist output contains no JSON object");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(*object_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checklist output is not valid JSON: ") + e.what());
  }
  ChecklistParse result;
  for (StageId s : kAllStages) {
    const char* key = to_string(s);
    if (!doc.contains(key))
      throw ParseError(std::string("checklist missing required key '") + key + "'");
    const auto& value = doc[key];
    if (!value.is_array())
      throw ParseError(std::string("checklist key '") + key + "' must be a list");
    for (const auto& item : value) {
      if (!item.is_string())
        throw ParseError(std::string("checklist key '") + key +
                         "' must contain only strings");
      std::string s_item = trim(item.get<std::string>());
      if (!s_item.empty()) result.doc[s].push_back(std::move(s_item));
    }
    result.doc[s];  // key exists even if everything was empty
  }
  std::set<std::string> known;
  for (StageId s : kAllStages) known.insert(to_string(s));
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key))
      result.warnings.push_back("ignored unknown checklist key '" + key + "'");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Generation

struct SummaryResult {
  std::string text;
};

inline SummaryResult generate_summary(const DischargeRecord& record,
                                      const Transcript& transcript,
                                      const PatientProfile& profile,
                                      ChatBackend& backend,
                                      const PromptLibrary& prompts,
                                      const std::string& model,
                                      std::uint64_t seed,
                                      double temperature = 0.7) {
  std::string prompt = prompts.render(
      "summary", {{"record", record_to_prompt_text(record)},
                  {"transcript", transcript_to_text(transcript)},
                  {"style_directives", summary_style_directives(profile)}});
  ChatRequest request;
  request.model = model;
  request.temperature = temperature;
  request.seed = seed;
  request.messages.push_back({"user", prompt});
  ChatResponse response = backend.complete(request);
  return {trim(response.content)};
}

struct ChecklistGenResult {
  ChecklistDoc doc;
  int attempts = 0;
  std::vector<std::string> warnings;
};

// Asks the model for the checklist JSON; on a malformed reply, retries once
// with the raw reply plus the parse error appended as a repair instruction.
inline ChecklistGenResult generate_checklist(const DischargeRecord& record,
                                             const Transcript& transcript,
                                             ChatBackend& backend,
                                             const PromptLibrary& prompts,
                                             const std::string& model,
                                             std::uint64_t seed,
                                             double temperature = 0.0) {
  std::vector<std::string> key_lines;
  for (StageId s : kAllStages)
    key_lines.push_back(std::string("  \"") + to_string(s) + "\"");
  std::string prompt = prompts.render(
      "checklist", {{"record", record_to_prompt_text(record)},
                    {"transcript", transcript_to_text(transcript)},
                    {"schema_keys", join(key_lines, "\n")}});

  ChatRequest request;
  request.model = model;
  request.temperature = temperature;
  request.seed = seed;
  request.messages.push_back({"user", prompt});

  ChecklistGenResult result;
  std::string last_error;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    result.attempts = attempt;
    ChatResponse response = backend.complete(request);
    try {
      ChecklistParse parsed = checklist_from_json_text(response.content);
      result.doc = std::move(parsed.doc);
      result.warnings = std::move(parsed.warnings);
      return result;
    } catch (const ParseError& e) {
      last_error = e.what();
      request.messages.push_back({"assistant", response.content});
      request.messages.push_back(
          {"user", std::string("That output could not be used: ") + last_error +
                       ". Reply again with only the corrected JSON object."});
    }
  }
  throw ParseError("checklist generation failed after " +
                   std::to_string(result.attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Reference checklist derived mechanically from the record. Rendering of
// multi-field items matches the canonical render_* helpers so downstream
// matching sees consistent text.

inline ChecklistDoc derive_gold_checklist(const DischargeRecord& record) {
  ChecklistDoc doc = empty_checklist();
  for (const auto& d : record.diagnoses) doc[StageId::diagnosis].push_back(d.name);
  for (const auto& c : record.in_hospital_course) {
    std::string item = render_course_event(c);
    if (!item.empty()) doc[StageId::tests_and_treatments].push_back(item);
  }
  for (const auto& s : record.return_indicators)
    doc[StageId::return_indicators].push_back(s);
  for (const auto& m : record.medications) {
    std::string item = render_medication(m);
    if (!item.empty()) doc[StageId::medications].push_back(item);
  }
  for (const auto& s : record.post_discharge_treatments)
    doc[StageId::post_discharge_treatment].push_back(s);
  for (const auto& f : record.follow_up) {
    std::string item = render_follow_up(f);
    if (!item.empty()) doc[StageId::follow_up].push_back(item);
  }
  return doc;
}

}  // namespace dsim
