#pragma once

#include <array>
#include <string>
#include <string_view>

#include "dsim/error.hpp"

namespace dsim {

// The six discharge-education content stages. Wire names are fixed: they are
// the checklist section keys and the exam question categories.
enum class StageId {
  diagnosis,
  tests_and_treatments,
  return_indicators,
  medications,
  post_discharge_treatment,
  follow_up,
};

inline constexpr std::array<StageId, 6> kAllStages = {
    StageId::diagnosis,           StageId::tests_and_treatments,
    StageId::return_indicators,   StageId::medications,
    StageId::post_discharge_treatment, StageId::follow_up,
};

inline const char* to_string(StageId s) {
  switch (s) {
    case StageId::diagnosis: return "diagnosis";
    case StageId::tests_and_treatments: return "tests_and_treatments";
    case StageId::return_indicators: return "return_indicators";
    case StageId::medications: return "medications";
    case StageId::post_discharge_treatment: return "post_discharge_treatment";
    case StageId::follow_up: return "follow_up";
  }
  throw ValidationError("bad StageId");
}

inline StageId stage_from_string(std::string_view s) {
  for (StageId id : kAllStages)
    if (s == to_string(id)) return id;
  throw ParseError("unknown stage id: " + std::string(s));
}

inline const char* stage_display_name(StageId s) {
  switch (s) {
    case StageId::diagnosis: return "Diagnosis";
    case StageId::tests_and_treatments: return "Tests and Treatments";
    case StageId::return_indicators: return "Return-to-Hospital Indicators";
    case StageId::medications: return "Medications";
    case StageId::post_discharge_treatment: return "Post-discharge Treatment";
    case StageId::follow_up: return "Follow-up";
  }
  throw ValidationError("bad StageId");
}

// Per-stage education goal handed to the doctor agent.
inline const char* stage_goal(StageId s) {
  switch (s) {
    case StageId::diagnosis:
      return "Explain the chief complaint and the main and secondary diagnoses "
             "of the patient, in words the patient can repeat back.";
    case StageId::tests_and_treatments:
      return "Explain what type of treatments and tests were done during the "
             "hospital stay, and what the results were.";
    case StageId::return_indicators:
      return "Explain the signs and symptoms the patient should be aware of "
             "that mean they should contact or return to the hospital or "
             "Emergency Department.";
    case StageId::medications:
      return "Explain the medications that the patient takes post-discharge: "
             "for every prescribed drug, its name, dose, route, frequency, and "
             "purpose. Cover all medications before moving on.";
    case StageId::post_discharge_treatment:
      return "Explain what kind of actions or activities the patient should or "
             "should not be doing post-discharge, including home care and "
             "activity restrictions.";
    case StageId::follow_up:
      return "Explain when and where the patient should follow up on their "
             "health issues post-discharge.";
  }
  throw ValidationError("bad StageId");
}

// The six clinician communication strategies the doctor agent is told to use
// and the strategy rubric scores.
enum class StrategyId {
  fostering_relationship,
  gathering_information,
  providing_information,
  decision_making,
  enabling_behavior,
  responding_to_emotions,
};

inline constexpr std::array<StrategyId, 6> kAllStrategies = {
    StrategyId::fostering_relationship, StrategyId::gathering_information,
    StrategyId::providing_information,  StrategyId::decision_making,
    StrategyId::enabling_behavior,      StrategyId::responding_to_emotions,
};

inline const char* to_string(StrategyId s) {
  switch (s) {
    case StrategyId::fostering_relationship: return "fostering_relationship";
    case StrategyId::gathering_information: return "gathering_information";
    case StrategyId::providing_information: return "providing_information";
    case StrategyId::decision_making: return "decision_making";
    case StrategyId::enabling_behavior: return "enabling_behavior";
    case StrategyId::responding_to_emotions: return "responding_to_emotions";
  }
  throw ValidationError("bad StrategyId");
}

inline StrategyId strategy_from_string(std::string_view s) {
  for (StrategyId id : kAllStrategies)
    if (s == to_string(id)) return id;
  throw ParseError("unknown strategy id: " + std::string(s));
}

inline const char* strategy_display_name(StrategyId s) {
  switch (s) {
    case StrategyId::fostering_relationship: return "Fostering relationship";
    case StrategyId::gathering_information: return "Gathering information";
    case StrategyId::providing_information: return "Providing information";
    case StrategyId::decision_making: return "Decision making";
    case StrategyId::enabling_behavior: return "Enabling disease and treatment-related behavior";
    case StrategyId::responding_to_emotions: return "Responding to emotions";
  }
  throw ValidationError("bad StrategyId");
}

inline const char* strategy_description(StrategyId s) {
  switch (s) {
    case StrategyId::fostering_relationship:
      return "Build rapport and connection, respect patient statements, "
             "privacy, autonomy, engage in partnership building. Express "
             "caring and commitment. Use appropriate language. Encourage "
             "patient participation. Show interest in the patient as a person.";
    case StrategyId::gathering_information:
      return "Attempt to understand the patient's needs for the encounter. "
             "Elicit full description of major reason for visit from "
             "biological and physiological perspectives. Ask open-ended "
             "questions. Allow patient to complete responses. Listen actively. "
             "Elicit patient's full set of concerns. Elicit patient's "
             "perspective on the problem/illness. Explore full effect of the "
             "illness. Clarify information. Inquire about additional concerns.";
    case StrategyId::providing_information:
      return "Seek to understand patient's informational needs. Share "
             "information. Overcome barriers to patient understanding. "
             "Facilitate understanding. Explain nature of the problem and "
             "approach to diagnosis, treatment. Give uncomplicated "
             "explanations and instructions. Avoid jargon and complexity. "
             "Encourage questions and check understanding. Emphasize key "
             "messages.";
    case StrategyId::decision_making:
      return "Outline collaborative action plan. Identify and enlist "
             "resources and support. Discuss follow-up and plan for "
             "unexpected outcomes.";
    case StrategyId::enabling_behavior:
      return "Assess patient's interest in and capacity for self-management. "
             "Provide advice (information needs, coping skills, strategies "
             "for success). Agree on next steps. Assist patient to optimize "
             "autonomy and self-management. Arrange for needed support. "
             "Advocate for, and assist patient with, health system "
             "navigation. Assess patient's readiness to change health "
             "behaviors. Elicit goals, ideas, and decisions.";
    case StrategyId::responding_to_emotions:
      return "Facilitate patient expression of emotional consequences of "
             "illness. Acknowledge and explore emotions. Express empathy, "
             "sympathy, and reassurance. Provide help in dealing with "
             "emotions. Assess psychological distress.";
  }
  throw ValidationError("bad StrategyId");
}

}  // namespace dsim
