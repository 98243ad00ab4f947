#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsim/backend.hpp"
#include "dsim/error.hpp"
#include "dsim/prompts.hpp"
#include "dsim/scenario.hpp"
#include "dsim/stages.hpp"
#include "dsim/util.hpp"

namespace dsim {

enum class Speaker { doctor, patient };

inline const char* to_string(Speaker s) {
  return s == Speaker::doctor ? "doctor" : "patient";
}
inline Speaker speaker_from_string(std::string_view s) {
  if (s == "doctor") return Speaker::doctor;
  if (s == "patient") return Speaker::patient;
  throw ParseError("unknown speaker: " + std::string(s));
}

struct Turn {
  Speaker speaker = Speaker::doctor;
  StageId stage = StageId::diagnosis;
  std::string text;                    // marker already stripped
  bool advance_marker_present = false; // doctor signalled stage completion here
  bool operator==(const Turn&) const = default;
};

struct Transcript {
  std::vector<Turn> turns;
  std::uint64_t seed = 0;
  // stage -> (first, last) turn index, inclusive; only stages that ran.
  std::map<StageId, std::pair<std::size_t, std::size_t>> stage_boundaries;
  bool operator==(const Transcript&) const = default;
};

struct DialogueResult {
  Transcript transcript;  // partial if error is set
  std::optional<std::string> error;
};

// ---------------------------------------------------------------------------
// Stage machine configuration.

struct StageConfig {
  std::vector<StageId> order{kAllStages.begin(), kAllStages.end()};
  int doctor_turn_cap = 5;         // per stage, unless overridden below
  int medications_safety_cap = 30; // medications get extra room by default
  std::map<StageId, int> per_stage_cap;
  std::string advance_marker = "[NEXT_STAGE]";

  int cap_for(StageId stage) const {
    auto it = per_stage_cap.find(stage);
    if (it != per_stage_cap.end()) return it->second;
    return stage == StageId::medications ? medications_safety_cap : doctor_turn_cap;
  }
};

inline void validate_stage_config(const StageConfig& cfg) {
  if (cfg.order.size() != kAllStages.size())
    throw ConfigError("stage order must list all " +
                      std::to_string(kAllStages.size()) + " stages");
  std::set<StageId> seen(cfg.order.begin(), cfg.order.end());
  if (seen.size() != kAllStages.size())
    throw ConfigError("stage order must be a permutation with no repeats");
  if (cfg.doctor_turn_cap < 1 || cfg.medications_safety_cap < 1)
    throw ConfigError("stage caps must be at least 1");
  for (const auto& [stage, cap] : cfg.per_stage_cap)
    if (cap < 1)
      throw ConfigError(std::string("cap for stage ") + to_string(stage) +
                        " must be at least 1");
  if (cfg.advance_marker.empty())
    throw ConfigError("advance marker must be nonempty");
}

// Returns whether the marker occurs, plus the text with every occurrence
// removed and whitespace re-trimmed.
inline std::pair<bool, std::string> detect_stage_advance(const std::string& text,
                                                         const std::string& marker) {
  bool present = contains(text, marker);
  return {present, present ? strip_token(text, marker) : trim(text)};
}

// Synthetic user-role note that opens each stage on the doctor's side. Gives
// scripted doctors a stable hook for stage-aware replies.
inline std::string stage_kickoff_note(StageId stage) {
  return std::string("(Care coordinator: please cover ") + stage_display_name(stage) +
         " with the patient now.)";
}

// ---------------------------------------------------------------------------

struct EngineParams {
  std::string doctor_model;
  std::string patient_model;
  double doctor_temperature = 0.7;
  double patient_temperature = 0.7;
  std::optional<int> max_tokens;
};

// Runs the staged doctor-patient dialogue. Every doctor utterance is answered
// by exactly one patient reply, including the utterance that carries the
// advance marker. A stage ends on the marker or on its doctor-turn cap.
// Backend and response-shape failures stop the dialogue but keep the partial
// transcript; configuration faults propagate.
inline DialogueResult run_dialogue(const DischargeRecord& record,
                                   const PatientProfile& profile,
                                   ChatBackend& doctor_backend,
                                   ChatBackend& patient_backend,
                                   const PromptLibrary& prompts,
                                   const StageConfig& stage_cfg,
                                   const EngineParams& params,
                                   std::uint64_t seed) {
  validate_stage_config(stage_cfg);
  DialogueResult result;
  result.transcript.seed = seed;

  const PatientView view = apply_memory_mask(record, profile);
  const std::string record_text = record_to_prompt_text(record);
  const std::string profile_summary = profile_summary_for_doctor(profile);
  const std::string patient_system =
      prompts.render("patient_persona",
                     {{"persona", persona_directives(profile)},
                      {"patient_view", patient_view_to_prompt_text(view)}});

  std::vector<ChatMessage> doctor_history;   // doctor = assistant, rest = user
  std::vector<ChatMessage> patient_history;  // patient = assistant, doctor = user

  auto make_request = [&](const std::string& model, const std::string& system,
                          const std::vector<ChatMessage>& history, double temperature) {
    ChatRequest request;
    request.model = model;
    request.temperature = temperature;
    request.max_tokens = params.max_tokens;
    request.seed = seed;
    request.messages.push_back({"system", system});
    request.messages.insert(request.messages.end(), history.begin(), history.end());
    return request;
  };

  for (StageId stage : stage_cfg.order) {
    const std::string doctor_system = prompts.render(
        "doctor_stage", {{"record", record_text},
                         {"profile_summary", profile_summary},
                         {"stage_name", stage_display_name(stage)},
                         {"stage_goal", stage_goal(stage)},
                         {"strategies", strategies_block()},
                         {"advance_marker", stage_cfg.advance_marker}});
    doctor_history.push_back({"user", stage_kickoff_note(stage)});

    const int cap = stage_cfg.cap_for(stage);
    for (int doctor_turn = 0; doctor_turn < cap; ++doctor_turn) {
      std::string doctor_text;
      bool advance = false;
      try {
        ChatResponse response = doctor_backend.complete(make_request(
            params.doctor_model, doctor_system, doctor_history,
            params.doctor_temperature));
        std::tie(advance, doctor_text) =
            detect_stage_advance(response.content, stage_cfg.advance_marker);
      } catch (const TransportError& e) {
        result.error = std::string("doctor backend failed: ") + e.what();
        return result;
      } catch (const ProviderError& e) {
        result.error = std::string("doctor backend failed: ") + e.what();
        return result;
      } catch (const ParseError& e) {
        result.error = std::string("doctor backend failed: ") + e.what();
        return result;
      }
      result.transcript.turns.push_back({Speaker::doctor, stage, doctor_text, advance});
      doctor_history.push_back({"assistant", doctor_text});
      patient_history.push_back({"user", doctor_text});

      std::string patient_text;
      try {
        ChatResponse response = patient_backend.complete(make_request(
            params.patient_model, patient_system, patient_history,
            params.patient_temperature));
        patient_text = trim(response.content);
      } catch (const TransportError& e) {
        result.error = std::string("patient backend failed: ") + e.what();
        return result;
      } catch (const ProviderError& e) {
        result.error = std::string("patient backend failed: ") + e.what();
        return result;
      } catch (const ParseError& e) {
        result.error = std::string("patient backend failed: ") + e.what();
        return result;
      }
      result.transcript.turns.push_back({Speaker::patient, stage, patient_text, false});
      patient_history.push_back({"assistant", patient_text});
      doctor_history.push_back({"user", patient_text});

      if (advance) break;  // stage complete; cap exhaustion falls through
    }
  }

  // Record inclusive turn-index ranges per stage actually present.
  for (std::size_t i = 0; i < result.transcript.turns.size(); ++i) {
    StageId stage = result.transcript.turns[i].stage;
    auto [it, inserted] = result.transcript.stage_boundaries.try_emplace(stage, i, i);
    if (!inserted) it->second.second = i;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Renderings and wire format.

inline std::string speaker_label(Speaker s) {
  return s == Speaker::doctor ? "Doctor" : "Patient";
}

inline std::string transcript_to_text(const Transcript& t) {
  std::vector<std::string> lines;
  for (const auto& turn : t.turns)
    lines.push_back(speaker_label(turn.speaker) + ": " + turn.text);
  return join(lines, "\n");
}

inline nlohmann::json to_json(const Transcript& t) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& turn : t.turns)
    turns.push_back({{"speaker", to_string(turn.speaker)},
                     {"stage", to_string(turn.stage)},
                     {"text", turn.text},
                     {"advance_marker_present", turn.advance_marker_present}});
  nlohmann::json boundaries = nlohmann::json::object();
  for (const auto& [stage, range] : t.stage_boundaries)
    boundaries[to_string(stage)] = {range.first, range.second};
  return {{"turns", turns},
          {"seed", t.seed},
          {"stage_boundaries", boundaries}};
}

inline Transcript transcript_from_json(const nlohmann::json& j) {
  Transcript t;
  t.seed = j.value("seed", 0ull);
  for (const auto& turn : j.at("turns")) {
    t.turns.push_back({speaker_from_string(turn.at("speaker").get<std::string>()),
                       stage_from_string(turn.at("stage").get<std::string>()),
                       turn.at("text").get<std::string>(),
                       turn.value("advance_marker_present", false)});
  }
  if (j.contains("stage_boundaries")) {
    for (const auto& [key, range] : j["stage_boundaries"].items())
      t.stage_boundaries[stage_from_string(key)] = {range[0].get<std::size_t>(),
                                                    range[1].get<std::size_t>()};
  }
  return t;
}

}  // namespace dsim
