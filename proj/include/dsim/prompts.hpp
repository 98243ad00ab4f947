#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dsim/error.hpp"
#include "dsim/scenario.hpp"
#include "dsim/stages.hpp"
#include "dsim/util.hpp"

namespace dsim {

// ---------------------------------------------------------------------------
// Profile-conditioned directive text. These strings are prompt material; tests
// pin the load-bearing words (e.g. "anxious", "reassuring"), so edit with care.

inline std::string persona_directives(const PatientProfile& p) {
  std::vector<std::string> parts;
  switch (p.health_literacy) {
    case HealthLiteracy::low:
      parts.push_back(
          "You have low health literacy. Medical terms confuse you, and you often "
          "need them explained in everyday words before you understand.");
      break;
    case HealthLiteracy::high:
      parts.push_back(
          "You have high health literacy. You are comfortable with common medical "
          "terms and follow clinical explanations easily.");
      break;
  }
  switch (p.education) {
    case EducationLevel::edu1_no_hs:
      parts.push_back("You did not finish high school.");
      break;
    case EducationLevel::edu2_hs_ged:
      parts.push_back("You finished high school (or earned a GED).");
      break;
    case EducationLevel::edu3_college:
      parts.push_back("You completed a college degree.");
      break;
  }
  switch (p.emotion) {
    case EmotionStyle::neutral:
      parts.push_back(
          "You are calm and cooperative. You answer questions directly and ask for "
          "clarification when something is unclear.");
      break;
    case EmotionStyle::anxious:
      parts.push_back(
          "You are anxious about going home. You worry aloud about what could go "
          "wrong, ask for reassurance, and sometimes circle back to fears the "
          "doctor has already addressed.");
      break;
    case EmotionStyle::deflective:
      parts.push_back(
          "You are deflective. You give short answers, change the subject away "
          "from uncomfortable topics, and downplay symptoms unless pressed.");
      break;
  }
  return join(parts, "\n");
}

// One-line patient description embedded in the doctor's system prompt.
inline std::string profile_summary_for_doctor(const PatientProfile& p) {
  std::string literacy = p.health_literacy == HealthLiteracy::low
                             ? "low health literacy"
                             : "high health literacy";
  std::string education;
  switch (p.education) {
    case EducationLevel::edu1_no_hs: education = "did not finish high school"; break;
    case EducationLevel::edu2_hs_ged: education = "finished high school"; break;
    case EducationLevel::edu3_college: education = "completed college"; break;
  }
  std::string emotion;
  switch (p.emotion) {
    case EmotionStyle::neutral:
      emotion = "is calm and engaged";
      break;
    case EmotionStyle::anxious:
      emotion = "is anxious and seeks reassurance";
      break;
    case EmotionStyle::deflective:
      emotion = "tends to deflect and downplay concerns";
      break;
  }
  return "The patient has " + literacy + ", " + education + ", and " + emotion +
         ". Tailor wording, depth, and tone accordingly.";
}

// Style directives for the take-home summary generator.
inline std::string summary_style_directives(const PatientProfile& p) {
  std::vector<std::string> parts;
  if (p.health_literacy == HealthLiteracy::low)
    parts.push_back(
        "Use plain everyday words and short sentences; explain any unavoidable "
        "medical term the first time it appears.");
  else
    parts.push_back(
        "Standard medical terms are fine, but keep the structure easy to scan.");
  if (p.education == EducationLevel::edu1_no_hs)
    parts.push_back("Keep reading level simple; prefer concrete instructions over "
                    "background explanation.");
  switch (p.emotion) {
    case EmotionStyle::anxious:
      parts.push_back(
          "Use a calm, reassuring tone; frame warning signs as a safety net, not a "
          "list of dangers.");
      break;
    case EmotionStyle::deflective:
      parts.push_back(
          "Be direct and concrete so nothing important can be brushed aside; state "
          "clearly why each instruction matters.");
      break;
    case EmotionStyle::neutral:
      parts.push_back("Use a clear, friendly, matter-of-fact tone.");
      break;
  }
  return join(parts, "\n");
}

// All six strategy descriptions, one per line, as given to the doctor agent.
inline std::string strategies_block() {
  std::vector<std::string> lines;
  for (StrategyId s : kAllStrategies)
    lines.push_back(std::string("- ") + strategy_display_name(s) + ": " +
                    strategy_description(s));
  return join(lines, "\n");
}

// ---------------------------------------------------------------------------
// Readable renderings of structured inputs for prompt embedding.

inline std::string record_to_prompt_text(const DischargeRecord& r) {
  std::vector<std::string> lines;
  lines.push_back("Chief complaint: " + r.chief_complaint);
  lines.push_back("Diagnoses:");
  for (const auto& d : r.diagnoses)
    lines.push_back(std::string("  - ") + d.name + " (" + to_string(d.kind) + ")");
  lines.push_back("In-hospital course:");
  for (const auto& c : r.in_hospital_course)
    lines.push_back("  - " + c.event + (c.result.empty() ? "" : ": " + c.result));
  lines.push_back("Medications:");
  for (const auto& m : r.medications) {
    std::string line = "  - " + join_nonempty({m.name, m.dose, m.route, m.frequency});
    if (!m.purpose.empty()) line += " — " + m.purpose;
    if (m.prn) line += " [take only as needed]";
    lines.push_back(line);
  }
  lines.push_back("Return to the hospital if:");
  for (const auto& s : r.return_indicators) lines.push_back("  - " + s);
  lines.push_back("Post-discharge treatment:");
  for (const auto& s : r.post_discharge_treatments) lines.push_back("  - " + s);
  lines.push_back("Follow-up:");
  for (const auto& f : r.follow_up)
    lines.push_back("  - " + join_nonempty({f.provider, f.timing, f.reason}));
  return join(lines, "\n");
}

// Same layout for the masked patient view; sections emptied by the mask are
// omitted entirely rather than shown as empty headings.
inline std::string patient_view_to_prompt_text(const PatientView& v) {
  std::vector<std::string> lines;
  if (!v.chief_complaint.empty())
    lines.push_back("Why you went to the hospital: " + v.chief_complaint);
  if (!v.diagnoses.empty()) {
    lines.push_back("What you were told you have:");
    for (const auto& d : v.diagnoses) lines.push_back("  - " + d.name);
  }
  if (!v.in_hospital_course.empty()) {
    lines.push_back("What happened during your stay:");
    for (const auto& c : v.in_hospital_course)
      lines.push_back("  - " + c.event + (c.result.empty() ? "" : ": " + c.result));
  }
  if (!v.medications.empty()) {
    lines.push_back("Medicines you were given:");
    for (const auto& m : v.medications)
      lines.push_back("  - " + join_nonempty({m.name, m.dose, m.route, m.frequency}));
  }
  if (!v.return_indicators.empty()) {
    lines.push_back("Warning signs you were told about:");
    for (const auto& s : v.return_indicators) lines.push_back("  - " + s);
  }
  if (!v.post_discharge_treatments.empty()) {
    lines.push_back("Home care you were told about:");
    for (const auto& s : v.post_discharge_treatments) lines.push_back("  - " + s);
  }
  if (!v.follow_up.empty()) {
    lines.push_back("Appointments you were told about:");
    for (const auto& f : v.follow_up)
      lines.push_back("  - " + join_nonempty({f.provider, f.timing, f.reason}));
  }
  if (lines.empty()) lines.push_back("You remember very little about your stay.");
  return join(lines, "\n");
}

// ---------------------------------------------------------------------------
// Prompt template registry. Embedded defaults are canonical; a prompt dir can
// override any of them with a file named <template>.txt.

namespace prompt_text {

inline const char* kDoctorStage = R"PROMPT(You are the attending physician conducting a discharge education conversation with your patient, who is about to go home from the hospital.

Authoritative discharge record (do not invent facts beyond it):
{{record}}

Patient background: {{profile_summary}}

The conversation is organized into parts. The current part is: {{stage_name}}.
Goal for this part: {{stage_goal}}

Communication strategies to draw on:
{{strategies}}

Speak directly to the patient in plain, respectful language matched to their background. Cover the goal step by step, check that the patient understands, and answer their questions. When the goal for this part is fully covered and the patient has no remaining questions about it, end your reply with the exact marker {{advance_marker}}. Never emit the marker before the goal is covered.)PROMPT";

inline const char* kPatientPersona = R"PROMPT(You are a patient about to be discharged from the hospital, talking with your doctor.

Who you are:
{{persona}}

What you remember about your stay and your instructions (you know nothing beyond this):
{{patient_view}}

Stay in character. Ask about anything you do not understand, answer the doctor's questions honestly from what you remember, and keep each reply conversational — a few sentences at most. Never invent medical facts that are not in what you remember or in what the doctor has told you.)PROMPT";

inline const char* kSummary = R"PROMPT(You are preparing a personalized discharge summary for a patient to take home.

Discharge record:
{{record}}

Conversation between the doctor and the patient at discharge:
{{transcript}}

Write the summary for this specific patient:
{{style_directives}}

Cover the diagnosis, the tests and treatments received in the hospital, each medication (name, dose, and when to take it), the warning signs that should prompt a return to the hospital, home care instructions, and follow-up appointments. Address the patient as "you". Output only the summary text.)PROMPT";

inline const char* kChecklist = R"PROMPT(You are extracting a structured discharge checklist from a conversation.

Discharge record:
{{record}}

Conversation:
{{transcript}}

Produce a JSON object with exactly these six keys, each mapping to a list of short checklist item strings:
{{schema_keys}}

List each distinct fact or instruction the patient needs to remember or act on, phrased as a short self-contained item. Use an empty list for a key when the conversation covered nothing for it. Output only the JSON object, with no surrounding prose.)PROMPT";

inline const char* kExamSystem = R"PROMPT(You are a patient who was just discharged from the hospital.

Who you are:
{{persona}}

You will be asked a question about your discharge instructions. Answer in character, using only the information provided to you in the question.)PROMPT";

inline const char* kExamQuestion = R"PROMPT({{context_label}}:
{{context}}

Based only on the information above, answer the following question.

{{stem}}
(a) {{choice_a}}
(b) {{choice_b}}
(c) {{choice_c}}

Reply with the single letter a, b, or c.)PROMPT";

}  // namespace prompt_text

class PromptLibrary {
 public:
  static const std::map<std::string, std::string>& embedded_defaults() {
    static const std::map<std::string, std::string> kDefaults = {
        {"doctor_stage", prompt_text::kDoctorStage},
        {"patient_persona", prompt_text::kPatientPersona},
        {"summary", prompt_text::kSummary},
        {"checklist", prompt_text::kChecklist},
        {"exam_system", prompt_text::kExamSystem},
        {"exam_question", prompt_text::kExamQuestion},
    };
    return kDefaults;
  }

  static PromptLibrary with_defaults() {
    PromptLibrary lib;
    lib.templates_ = embedded_defaults();
    return lib;
  }

  // Replaces any template for which <name>.txt exists in dir. Files that do
  // not correspond to a known template name are left alone.
  void load_overrides(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
      throw ConfigError("prompt dir does not exist: " + dir);
    for (auto& [name, text] : templates_) {
      fs::path candidate = fs::path(dir) / (name + ".txt");
      if (fs::is_regular_file(candidate)) text = read_file(candidate.string());
    }
  }

  const std::string& get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
      throw ConfigError("unknown prompt template: " + name);
    return it->second;
  }

  std::string render(const std::string& name,
                     const std::vector<std::pair<std::string, std::string>>& slots) const {
    return substitute_slots(get(name), slots);
  }

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace dsim
