#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/error.hpp"
#include "dsim/util.hpp"

namespace dsim {

enum class RubricId {
  language_delivery,
  human_centered,
  content_coverage,
  education_strategy,
  summary_group_a,
  summary_group_b,
};

inline constexpr std::array<RubricId, 6> kAllRubrics = {
    RubricId::language_delivery, RubricId::human_centered,
    RubricId::content_coverage,  RubricId::education_strategy,
    RubricId::summary_group_a,   RubricId::summary_group_b};

inline const char* to_string(RubricId id) {
  switch (id) {
    case RubricId::language_delivery: return "language_delivery";
    case RubricId::human_centered: return "human_centered";
    case RubricId::content_coverage: return "content_coverage";
    case RubricId::education_strategy: return "education_strategy";
    case RubricId::summary_group_a: return "summary_group_a";
    case RubricId::summary_group_b: return "summary_group_b";
  }
  throw ValidationError("bad RubricId");
}

inline RubricId rubric_from_string(std::string_view s) {
  for (RubricId id : kAllRubrics)
    if (s == to_string(id)) return id;
  throw ParseError("unknown rubric: " + std::string(s));
}

struct RubricDef {
  RubricId rubric_id = RubricId::language_delivery;
  std::vector<std::string> criteria;  // ordered; names are the JSON keys
  bool requires_evidence = false;
  std::string aggregate_key;  // judge-side key holding the (distrusted) average
  std::string prompt_template;  // [[SYSTEM]] / [[USER]] sections with {{slots}}

  // Slot names the template demands; '?'-prefixed slots in the text are
  // optional and excluded here.
  std::vector<std::string> required_inputs() const {
    std::vector<std::string> out;
    for (const auto& slot : template_slots(prompt_template))
      if (!slot.optional) out.push_back(slot.name);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Prompt templates. The [[SYSTEM]] body of each template reproduces the
// corresponding evaluator prompt verbatim (modulo plain-ASCII punctuation);
// the [[USER]] section supplies the materials being judged. Registered
// criterion names must match the JSON keys shown in each Output Format block.

namespace rubric_text {

inline const char* kLanguageDelivery = R"RUBRIC([[SYSTEM]]
You are an expert evaluator trained to assess the language quality and patient-centeredness of doctor responses in clinical discharge conversations.

You will be provided with:
- A Doctor-Patient Conversation transcript
- A Ground Truth Discharge Note, which contains the verified medical facts, diagnoses, and discharge instructions for the case

STRICT SCORING INSTRUCTIONS

Be strict and conservative in your evaluation:
- Do not assign scores higher than 3.8 unless the language and communication quality are clearly exceptional and consistent across the entire conversation
- A score of 4.0 or above should be extremely rare, and only permitted if all responses are:
  - Free from vague or overly general phrasing
  - Free from repetition or template-like delivery
  - Highly empathetic, clear, and personalized to the patient's situation
- Most conversations should score between 2.5 and 3.8
- Penalize even subtle weaknesses:
  - Redundant phrases
  - Overuse of generic reassurances
  - Slightly confusing transitions or non-specific encouragement

Language & Delivery
- Linguistic Clarity: Is the response fluent, readable, and easy to understand for the patient's stated education level? Penalize convoluted syntax, awkward phrasing, or vague language.
- Coherence: Does the conversation maintain logical structure and flow from turn to turn? Penalize digressions, abrupt transitions, or unclear logical progression.
- Repetitiveness: Does the response avoid repeating phrases, ideas, or sentence templates? Penalize overuse of phrases like "Take it one day at a time" or "Please reach out if needed" unless clearly personalized.

Criteria & Scoring
- 5.0 = Perfect: Every sentence is linguistically fluent, empathetic, and natural; fully tailored to the patient's literacy, tone, and needs. Extremely rare.
- 4.0-4.9 = Exceptional: Very strong across all criteria; minimal imperfections; still not generic.
- 3.0-3.9 = Competent: Generally human-like; minor repetition or vagueness; tone sometimes robotic; most model outputs fall here if decent.
- 2.0-2.9 = Weak: Multiple coherence/clarity flaws; generic language; emotionally disengaged.
- 1.0-1.9 = Very Poor: Disorganized, vague, or robotic; major patient questions missed or deflected.

Output Format

For each criterion, return:
- A score between 1.0 and 5.0 (decimals allowed)
- A brief justification (1-2 sentences)

Return your output in this JSON format:
{
  "Linguistic Clarity": {"score": ..., "justification": "..."},
  "Coherence": {"score": ..., "justification": "..."},
  "Repetitiveness": {"score": ..., "justification": "..."},
  "Language & Delivery score": ...
}
[[USER]]
Doctor-Patient Conversation:
{{transcript}}

Ground Truth Discharge Note:
{{gold_record}}
{{?profile}})RUBRIC";

inline const char* kHumanCentered = R"RUBRIC([[SYSTEM]]
You are an expert evaluator trained to assess the language quality and patient-centeredness of doctor responses in clinical discharge conversations.

You will be provided with:
- A Doctor-Patient Conversation transcript
- A Ground Truth Discharge Note, which contains the verified medical facts, diagnoses, and discharge instructions for the case

STRICT SCORING INSTRUCTIONS

Be strict and conservative in your evaluation:
- Do not assign scores higher than 3.8 unless the language and communication quality are clearly exceptional and consistent across the entire conversation
- A score of 4.0 or above should be extremely rare, and only permitted if all responses are:
  - Free from vague or overly general phrasing
  - Free from repetition or template-like delivery
  - Highly empathetic, clear, and personalized to the patient's situation
- Most conversations should score between 2.5 and 3.8
- Penalize even subtle weaknesses:
  - Redundant phrases
  - Overuse of generic reassurances
  - Slightly confusing transitions or non-specific encouragement

Human-Centered Communication
- Personalization & Empathy: Does the doctor show awareness of the patient's emotional state, literacy, and personal concerns? Penalize robotic tone, missing emotional cues, or excessive use of generic affirmations.
- Interaction Appropriateness: Does the doctor's response clearly address each patient concern in a natural, relevant way? Penalize vague deflections or educational monologues that ignore patient questions.

Criteria & Scoring
- 5.0 = Perfect: Every sentence is linguistically fluent, empathetic, and natural; fully tailored to the patient's literacy, tone, and needs. Extremely rare.
- 4.0-4.9 = Exceptional: Very strong across all criteria; minimal imperfections; still not generic.
- 3.0-3.9 = Competent: Generally human-like; minor repetition or vagueness; tone sometimes robotic; most model outputs fall here if decent.
- 2.0-2.9 = Weak: Multiple coherence/clarity flaws; generic language; emotionally disengaged.
- 1.0-1.9 = Very Poor: Disorganized, vague, or robotic; major patient questions missed or deflected.

Output Format

For each criterion, return:
- A score between 1.0 and 5.0 (decimals allowed)
- A brief justification (1-2 sentences)

Return your output in this JSON format:
{
  "Personalization & Empathy": {"score": ..., "justification": "..."},
  "Interaction Appropriateness": {"score": ..., "justification": "..."},
  "Human-Centered Communication score": ...
}
[[USER]]
Doctor-Patient Conversation:
{{transcript}}

Ground Truth Discharge Note:
{{gold_record}}
{{?profile}})RUBRIC";

inline const char* kContentCoverage = R"RUBRIC([[SYSTEM]]
You are an expert evaluator trained to assess the content quality of doctor responses in clinical discharge conversations.

You will be provided with:
- A Doctor-Patient Conversation transcript
- A Ground Truth Discharge Note, which contains the verified medical facts, diagnoses, and discharge instructions for the case

STRICT SCORING INSTRUCTIONS
- Do not assign scores higher than 3.8 unless the coverage, clarity, and personalization are exceptional and consistent.
- Scores of 4.0 or above should be extremely rare, and only allowed if:
  - The topic is addressed accurately, clearly, and with detail
  - No key item is omitted
  - No vague or generic phrasing is present
  - The response is highly personalized, not template-like
- Most conversations should score between 2.5 and 3.8
- Penalize subtle issues:
  - Mentioning a topic without explanation
  - Using vague language (e.g., "take care")
  - Partial or superficial content
  - Very short conversations that skip essentials

Criteria & Format
You will evaluate six clinical criteria. For each, provide:
- A score (1.0-5.0, decimals allowed)
- A justification (more than 10 words)
- A list of evidence spans:
  - Conversation snippet
  - Whether it addresses the criterion
  - Optional issue if omitted, vague, or hallucinated

Criteria Definitions

1. Indications to Return to Hospital/ED - Are specific red flags discussed (e.g., chest pain, fever)?
2. Medication Information - Are medication names, doses, and purposes clearly explained?
3. Diagnosis - Are chief complaint and final diagnoses clearly stated and contextualized?
4. Post-discharge Treatments - Are home care instructions, activity restrictions, or wound care clearly discussed?
5. Treatments/Tests During Stay - Are tests/treatments and outcomes during the stay described?
6. Follow-Up - Are follow-up provider, timing, and reason specified?

Output Format (JSON)
{
  "Indications to Return to Hospital": {
    "score": ...,
    "justification": "Red flags vaguely mentioned; lacked detail and personalization.",
    "evidence": [
      {"conversation": "Come back if anything gets worse", "addresses": true},
      {"conversation": "N/A", "addresses": false, "issue": "Omitted clear symptoms"}
    ]
  },
  ...
  "score": ...
}
[[USER]]
Doctor-Patient Conversation:
{{transcript}}

Ground Truth Discharge Note:
{{gold_record}})RUBRIC";

inline const char* kEducationStrategy = R"RUBRIC([[SYSTEM]]
You are an expert evaluator trained to assess the conversation strategy of doctor responses in clinical discharge conversations.

You will be provided with:
- A Doctor-Patient Conversation transcript
- A Ground Truth Discharge Note, which contains the verified medical facts, diagnoses, and discharge instructions for the case

STRICT SCORING INSTRUCTIONS
- Be strict and conservative in your evaluation
- Do not assign scores higher than 3.8 unless the conversation strategy is exceptional and consistent throughout the entire dialogue
- A score of 4.0 or above should be extremely rare, and only permitted if:
  - The agent shows clear empathy and rapport
  - Questions are open-ended and invite patient participation
  - Responses are tailored, emotionally sensitive, and supportive
  - There is evidence of shared decision making or support for patient self-management
- Most conversations should score between 2.5 and 3.8
- Penalize even subtle weaknesses:
  - Responses feel generic, overly scripted, or impersonal
  - Patient emotions are ignored or dismissed
  - No attempt to verify patient understanding or autonomy
  - Missed opportunity to clarify or encourage participation

Strategy Dimensions

You will rate each conversation across six key communication strategy criteria:

For each criterion, provide:
- A score from 1.0 to 5.0 (decimals allowed)
- A justification (more than 10 words)
- A list of evidence spans, each with:
  - the conversation snippet
  - a flag addresses (true/false)
  - an optional issue field for missing, vague, or problematic behavior

1. Fostering Relationship: Build rapport and connection, respect patient statements, privacy, and autonomy. Engage in partnership building. Express caring and commitment. Use appropriate language. Encourage patient participation. Show interest in the patient as a person.
- 5.0 = Consistent, warm, personalized interaction and active partnership-building
- 4.0-4.9 = Mostly caring and respectful with some generic language
- 3.0-3.9 = Neutral tone, minor signs of engagement
- < 3.0 = Cold, impersonal, or disrespectful tone

2. Gathering Information: Attempt to understand the patient's needs. Ask open-ended questions. Listen actively. Elicit concerns and perspectives. Clarify unclear information. Explore the full effect of illness.
- 5.0 = Multiple open-ended questions, follow-ups, and attentive listening
- 4.0-4.9 = Some engagement with patient perspective, mostly on-topic
- 3.0-3.9 = Minimal elicitation of patient input
- < 3.0 = No active effort to explore patient views

3. Providing Information: Understand the patient's informational needs. Share clear, jargon-free explanations. Facilitate understanding. Check comprehension and emphasize key messages.
- 5.0 = Clear, empathetic, responsive explanations
- 4.0-4.9 = Mostly clear, some assumptions about understanding
- 3.0-3.9 = Some helpful info, but generic or not well explained
- < 3.0 = Vague, unhelpful, or overly complex

4. Decision Making: Outline collaborative action plan. Discuss follow-up and plan for unexpected outcomes. Enlist support and check agreement.
- 5.0 = Joint decision-making, clear plan, checks patient agreement
- 4.0-4.9 = Presents options or plan, some patient involvement
- 3.0-3.9 = States plan without patient input
- < 3.0 = No mention of planning or collaboration

5. Enabling Behavior Change: Assess readiness for self-management. Provide coping strategies. Encourage autonomy. Arrange support.
- 5.0 = Encourages change with specific strategies and supports
- 4.0-4.9 = Some support for self-management
- 3.0-3.9 = Generic advice or no discussion of behavior
- < 3.0 = No guidance or autonomy support

6. Responding to Emotions: Explore emotional consequences of illness. Express empathy. Reassure or assist with emotional distress.
- 5.0 = Recognizes emotional tone, responds with empathy and care
- 4.0-4.9 = Attempts reassurance or brief acknowledgment
- 3.0-3.9 = Missed opportunities for emotional connection
- < 3.0 = No response to expressed or implied emotion

Output Format (JSON)
{
  "Fostering Relationship": {
    "score": ...,
    "justification": "...",
    "evidence": [
      {"conversation": "...", "addresses": true},
      {"conversation": "...", "addresses": false, "issue": "..."}
    ]
  },
  ...
  "score": ...
}
[[USER]]
Doctor-Patient Conversation:
{{transcript}}

Ground Truth Discharge Note:
{{gold_record}})RUBRIC";

inline const char* kSummaryGroupA = R"RUBRIC([[SYSTEM]]
You are an expert evaluator trained to assess the high-level writing quality and general appropriateness of AI-generated clinical discharge summaries. Your task is to evaluate the summary by reading it holistically and assigning scores for the following four subjective criteria.

Be strict and conservative:
- Do not give scores higher than 4.0 unless the performance is clearly exceptional.
- Most summaries should score between 2.5 and 3.8 unless outstanding.

For each of the following criteria, return:
- A score between 1.0 and 5.0 (decimals allowed)
- A brief justification (1-2 sentences)

Criteria:
1. Fluency - Is the summary grammatically correct, natural in tone, and professionally written?
2. Coherence - Is the structure of the summary logical and easy to follow?
3. Informativeness - Does the summary cover key points without being verbose or vague?
4. Personalization - Does the summary reflect the patient's specific context, including their diagnosis and background?

Return your output in the following JSON format:
{
  "Fluency": {"score": ..., "justification": "..."},
  "Coherence": {"score": ..., "justification": "..."},
  "Informativeness": {"score": ..., "justification": "..."},
  "Personalization": {"score": ..., "justification": "..."},
  "score": ...
}
[[USER]]
Generated Discharge Summary:
{{summary}})RUBRIC";

inline const char* kSummaryGroupB = R"RUBRIC([[SYSTEM]]
You are an expert evaluator trained to assess the faithfulness and completeness of AI-generated clinical discharge summaries by comparing them to:

1. A human-written reference summary
2. A doctor-patient conversation transcript

General Instructions
- Extract as much evidence as possible from the generated summary.
- Do not stop at a few examples - go line by line.
- Penalize sparse evidence when the reference contains more.
- If a score exceeds 4.0, justification must cite specific evidence.

Criteria:
1. Semantic Coverage - Are the major content units in the reference summary covered in the generated summary?
2. Factuality - Are all claims accurate and supported by the reference or conversation?
3. Relevance - Is all information directly related to discharge or follow-up?
4. Consistency - Is the summary free from contradictions with the source materials?

Output Format:
{
  "Semantic Coverage": {
    "score": ...,
    "justification": "... (more than 10 words)",
    "evidence": [
      {"summary": "...", "reference": "...", "match": true},
      {"summary": "...", "reference": "N/A", "match": false, "issue": "..."}
    ]
  },
  "Factuality": {
    "score": ...,
    "justification": "...",
    "evidence": [...]
  },
  "Relevance": {
    "score": ...,
    "justification": "...",
    "evidence": [...]
  },
  "Consistency": {
    "score": ...,
    "justification": "...",
    "evidence": [...]
  },
  "score": ...
}
[[USER]]
Generated Discharge Summary:
{{summary}}

Human-Written Reference Summary:
{{reference_summary}}

Doctor-Patient Conversation:
{{transcript}})RUBRIC";

}  // namespace rubric_text

// ---------------------------------------------------------------------------

class RubricRegistry {
 public:
  static RubricRegistry with_defaults() {
    RubricRegistry reg;
    reg.add({RubricId::language_delivery,
             {"Linguistic Clarity", "Coherence", "Repetitiveness"},
             false,
             "Language & Delivery score",
             rubric_text::kLanguageDelivery});
    reg.add({RubricId::human_centered,
             {"Personalization & Empathy", "Interaction Appropriateness"},
             false,
             "Human-Centered Communication score",
             rubric_text::kHumanCentered});
    reg.add({RubricId::content_coverage,
             {"Indications to Return to Hospital", "Medication Information",
              "Diagnosis", "Post-discharge Treatments", "Treatments/Tests During Stay",
              "Follow-Up"},
             true,
             "score",
             rubric_text::kContentCoverage});
    reg.add({RubricId::education_strategy,
             {"Fostering Relationship", "Gathering Information",
              "Providing Information", "Decision Making", "Enabling Behavior Change",
              "Responding to Emotions"},
             true,
             "score",
             rubric_text::kEducationStrategy});
    reg.add({RubricId::summary_group_a,
             {"Fluency", "Coherence", "Informativeness", "Personalization"},
             false,
             "score",
             rubric_text::kSummaryGroupA});
    reg.add({RubricId::summary_group_b,
             {"Semantic Coverage", "Factuality", "Relevance", "Consistency"},
             true,
             "score",
             rubric_text::kSummaryGroupB});
    return reg;
  }

  // Replaces the prompt template of any rubric for which <rubric_id>.txt
  // exists in dir. Criteria lists and schemas are fixed by the registry.
  void load_template_overrides(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
      throw ConfigError("rubric dir does not exist: " + dir);
    for (auto& [id, def] : defs_) {
      fs::path candidate = fs::path(dir) / (std::string(to_string(id)) + ".txt");
      if (fs::is_regular_file(candidate))
        def.prompt_template = read_file(candidate.string());
    }
  }

  const RubricDef& get(RubricId id) const {
    auto it = defs_.find(id);
    if (it == defs_.end())
      throw ConfigError(std::string("rubric not registered: ") + to_string(id));
    return it->second;
  }

  std::vector<RubricId> conversation_rubrics() const {
    return {RubricId::language_delivery, RubricId::human_centered,
            RubricId::content_coverage, RubricId::education_strategy};
  }
  std::vector<RubricId> summary_rubrics() const {
    return {RubricId::summary_group_a, RubricId::summary_group_b};
  }

 private:
  void add(RubricDef def) { defs_[def.rubric_id] = std::move(def); }
  std::map<RubricId, RubricDef> defs_;
};

// JSON Schema (draft-07) for a rubric's expected judge output; shipped next
// to the templates for documentation and external tooling.
inline nlohmann::json rubric_output_schema(const RubricDef& def) {
  nlohmann::json criterion_schema = {
      {"type", "object"},
      {"properties",
       {{"score", {{"type", "number"}, {"minimum", 1.0}, {"maximum", 5.0}}},
        {"justification", {{"type", "string"}}}}},
      {"required", nlohmann::json::array({"score", "justification"})}};
  if (def.requires_evidence) {
    criterion_schema["properties"]["evidence"] = {
        {"type", "array"},
        {"items",
         {{"type", "object"},
          {"properties",
           {{"conversation", {{"type", "string"}}},
            {"summary", {{"type", "string"}}},
            {"reference", {{"type", "string"}}},
            {"addresses", {{"type", "boolean"}}},
            {"match", {{"type", "boolean"}}},
            {"issue", {{"type", "string"}}}}}}}};
    criterion_schema["required"].push_back("evidence");
  }
  nlohmann::json properties = nlohmann::json::object();
  nlohmann::json required = nlohmann::json::array();
  for (const auto& name : def.criteria) {
    properties[name] = criterion_schema;
    required.push_back(name);
  }
  properties[def.aggregate_key] = {{"type", "number"}};
  return {{"$schema", "http://json-schema.org/draft-07/schema#"},
          {"title", std::string(to_string(def.rubric_id)) + "_output"},
          {"type", "object"},
          {"properties", properties},
          {"required", required}};
}

}  // namespace dsim
