#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/error.hpp"
#include "dsim/stages.hpp"
#include "dsim/util.hpp"

namespace dsim {

using json = nlohmann::json;

enum class DiagnosisKind { primary, secondary };

struct Diagnosis {
  std::string name;
  DiagnosisKind kind = DiagnosisKind::primary;
  bool operator==(const Diagnosis&) const = default;
};

struct MedicationOrder {
  std::string name;
  std::string dose;
  std::string route;
  std::string frequency;
  std::string purpose;
  bool prn = false;
  bool operator==(const MedicationOrder&) const = default;
};

struct CourseEvent {
  std::string event;
  std::string result;
  bool operator==(const CourseEvent&) const = default;
};

struct FollowUpItem {
  std::string provider;
  std::string timing;
  std::string reason;
  bool operator==(const FollowUpItem&) const = default;
};

// Structured parse of one discharge note. The doctor agent always sees the
// whole record; the patient agent sees a masked PatientView of it.
struct DischargeRecord {
  std::string record_id;
  std::string chief_complaint;
  std::vector<Diagnosis> diagnoses;
  std::vector<MedicationOrder> medications;
  std::vector<std::string> return_indicators;
  std::vector<std::string> post_discharge_treatments;
  std::vector<CourseEvent> in_hospital_course;
  std::vector<FollowUpItem> follow_up;
  std::optional<std::string> raw_note;
  bool operator==(const DischargeRecord&) const = default;
};

// A masked record. Same shape; masked sections are cleared or replaced by a
// fixed lay phrase, and raw_note is never carried into the view.
using PatientView = DischargeRecord;

enum class HealthLiteracy { low, high };
enum class EducationLevel { edu1_no_hs, edu2_hs_ged, edu3_college };
enum class EmotionStyle { neutral, anxious, deflective };
enum class MaskingMode { omit, blur_to_lay_phrase };

struct MaskPolicy {
  std::set<std::string> masked_sections;
  MaskingMode masking_mode = MaskingMode::omit;
  bool operator==(const MaskPolicy&) const = default;
};

struct PatientProfile {
  HealthLiteracy health_literacy = HealthLiteracy::high;
  EducationLevel education = EducationLevel::edu2_hs_ged;
  EmotionStyle emotion = EmotionStyle::neutral;
  MaskPolicy mask_policy;
  bool operator==(const PatientProfile&) const = default;
};

enum class ChoiceRole { answer, distractor, irrelevant };

struct ExamChoice {
  std::string text;
  ChoiceRole role = ChoiceRole::answer;
  bool operator==(const ExamChoice&) const = default;
};

struct ExamQuestion {
  std::string question_id;
  std::string stem;
  std::vector<ExamChoice> choices;  // exactly 3: answer, distractor, irrelevant
  StageId category = StageId::diagnosis;
  bool operator==(const ExamQuestion&) const = default;
};

struct Scenario {
  DischargeRecord record;
  std::string reference_summary;
  std::vector<ExamQuestion> questions;  // 5..10
  bool operator==(const Scenario&) const = default;
};

struct ScenarioSet {
  std::vector<Scenario> scenarios;
  bool operator==(const ScenarioSet&) const = default;
};

// ---------------------------------------------------------------------------
// enum <-> string

inline const char* to_string(DiagnosisKind k) {
  return k == DiagnosisKind::primary ? "primary" : "secondary";
}
inline DiagnosisKind diagnosis_kind_from_string(std::string_view s) {
  if (s == "primary") return DiagnosisKind::primary;
  if (s == "secondary") return DiagnosisKind::secondary;
  throw ParseError("unknown diagnosis kind: " + std::string(s));
}

inline const char* to_string(HealthLiteracy h) {
  return h == HealthLiteracy::low ? "low" : "high";
}
inline HealthLiteracy literacy_from_string(std::string_view s) {
  if (s == "low") return HealthLiteracy::low;
  if (s == "high") return HealthLiteracy::high;
  throw ParseError("unknown health_literacy: " + std::string(s));
}

inline const char* to_string(EducationLevel e) {
  switch (e) {
    case EducationLevel::edu1_no_hs: return "edu1_no_hs";
    case EducationLevel::edu2_hs_ged: return "edu2_hs_ged";
    case EducationLevel::edu3_college: return "edu3_college";
  }
  throw ValidationError("bad EducationLevel");
}
inline EducationLevel education_from_string(std::string_view s) {
  if (s == "edu1_no_hs") return EducationLevel::edu1_no_hs;
  if (s == "edu2_hs_ged") return EducationLevel::edu2_hs_ged;
  if (s == "edu3_college") return EducationLevel::edu3_college;
  throw ParseError("unknown education: " + std::string(s));
}

inline const char* to_string(EmotionStyle e) {
  switch (e) {
    case EmotionStyle::neutral: return "neutral";
    case EmotionStyle::anxious: return "anxious";
    case EmotionStyle::deflective: return "deflective";
  }
  throw ValidationError("bad EmotionStyle");
}
inline EmotionStyle emotion_from_string(std::string_view s) {
  if (s == "neutral") return EmotionStyle::neutral;
  if (s == "anxious") return EmotionStyle::anxious;
  if (s == "deflective") return EmotionStyle::deflective;
  throw ParseError("unknown emotion: " + std::string(s));
}

inline const char* to_string(MaskingMode m) {
  return m == MaskingMode::omit ? "omit" : "blur_to_lay_phrase";
}
inline MaskingMode masking_mode_from_string(std::string_view s) {
  if (s == "omit") return MaskingMode::omit;
  if (s == "blur_to_lay_phrase") return MaskingMode::blur_to_lay_phrase;
  throw ParseError("unknown masking_mode: " + std::string(s));
}

inline const char* to_string(ChoiceRole r) {
  switch (r) {
    case ChoiceRole::answer: return "answer";
    case ChoiceRole::distractor: return "distractor";
    case ChoiceRole::irrelevant: return "irrelevant";
  }
  throw ValidationError("bad ChoiceRole");
}
inline ChoiceRole choice_role_from_string(std::string_view s) {
  if (s == "answer") return ChoiceRole::answer;
  if (s == "distractor") return ChoiceRole::distractor;
  if (s == "irrelevant") return ChoiceRole::irrelevant;
  throw ParseError("unknown choice role: " + std::string(s));
}

// Human-readable profile key, used in run ids and cohort grouping.
inline std::string profile_key(const PatientProfile& p) {
  return std::string("hl-") + to_string(p.health_literacy) + "_" +
         to_string(p.education) + "_" + to_string(p.emotion);
}

// ---------------------------------------------------------------------------
// Masking

// Section identifiers a MaskPolicy may reference.
inline const std::set<std::string>& maskable_sections() {
  static const std::set<std::string> kSections = {
      "chief_complaint",        "diagnoses",
      "medications",            "return_indicators",
      "post_discharge_treatments", "in_hospital_course",
      "follow_up"};
  return kSections;
}

// Default policy table: high literacy keeps everything; low literacy blurs
// the diagnosis detail and the in-hospital course to lay phrases. Overridable
// per profile in config.
inline MaskPolicy default_mask_policy(HealthLiteracy literacy) {
  MaskPolicy policy;
  if (literacy == HealthLiteracy::low) {
    policy.masked_sections = {"diagnoses", "in_hospital_course"};
    policy.masking_mode = MaskingMode::blur_to_lay_phrase;
  }
  return policy;
}

namespace detail {
// Fixed lay placeholders. Constant so that masking is idempotent.
inline const char* kLayChiefComplaint =
    "the health problem that brought you to the hospital";
inline const char* kLayDiagnosis =
    "a health condition the care team explained to you";
inline const char* kLayCourseEvent = "some tests and treatments during your stay";
inline const char* kLayCourseResult = "the care team went over the results with you";
inline const char* kLayReturnIndicator =
    "warning signs the care team told you to watch for";
inline const char* kLayTreatment = "home care instructions from the care team";
inline const char* kLayMedication = "the medicines the care team prescribed";
inline const char* kLayFollowUpProvider = "your care team";
inline const char* kLayFollowUpTiming = "as advised";
inline const char* kLayFollowUpReason = "to check on your recovery";
}  // namespace detail

// Builds the patient-side view: masked sections are emptied (omit) or
// replaced by a fixed lay phrase (blur_to_lay_phrase); everything else is
// copied byte-identically. raw_note never reaches the patient side.
inline PatientView apply_memory_mask(const DischargeRecord& record,
                                     const PatientProfile& profile) {
  for (const auto& section : profile.mask_policy.masked_sections) {
    if (!maskable_sections().count(section))
      throw ConfigError("mask policy references unknown section: " + section);
  }
  PatientView view = record;
  view.raw_note.reset();
  const bool blur = profile.mask_policy.masking_mode == MaskingMode::blur_to_lay_phrase;
  for (const auto& section : profile.mask_policy.masked_sections) {
    if (section == "chief_complaint") {
      view.chief_complaint = blur ? detail::kLayChiefComplaint : "";
    } else if (section == "diagnoses") {
      view.diagnoses.clear();
      if (blur) view.diagnoses.push_back({detail::kLayDiagnosis, DiagnosisKind::primary});
    } else if (section == "medications") {
      view.medications.clear();
      if (blur) {
        MedicationOrder m;
        m.name = detail::kLayMedication;
        m.frequency = "as directed";
        view.medications.push_back(m);
      }
    } else if (section == "return_indicators") {
      view.return_indicators.clear();
      if (blur) view.return_indicators.push_back(detail::kLayReturnIndicator);
    } else if (section == "post_discharge_treatments") {
      view.post_discharge_treatments.clear();
      if (blur) view.post_discharge_treatments.push_back(detail::kLayTreatment);
    } else if (section == "in_hospital_course") {
      view.in_hospital_course.clear();
      if (blur)
        view.in_hospital_course.push_back(
            {detail::kLayCourseEvent, detail::kLayCourseResult});
    } else if (section == "follow_up") {
      view.follow_up.clear();
      if (blur)
        view.follow_up.push_back({detail::kLayFollowUpProvider,
                                  detail::kLayFollowUpTiming,
                                  detail::kLayFollowUpReason});
    }
  }
  return view;
}

// ---------------------------------------------------------------------------
// JSON wire format. Field names match the type definitions exactly.

inline json to_json(const DischargeRecord& r) {
  json diagnoses = json::array();
  for (const auto& d : r.diagnoses)
    diagnoses.push_back({{"name", d.name}, {"kind", to_string(d.kind)}});
  json meds = json::array();
  for (const auto& m : r.medications)
    meds.push_back({{"name", m.name},
                    {"dose", m.dose},
                    {"route", m.route},
                    {"frequency", m.frequency},
                    {"purpose", m.purpose},
                    {"prn", m.prn}});
  json course = json::array();
  for (const auto& c : r.in_hospital_course)
    course.push_back({{"event", c.event}, {"result", c.result}});
  json fu = json::array();
  for (const auto& f : r.follow_up)
    fu.push_back({{"provider", f.provider}, {"timing", f.timing}, {"reason", f.reason}});
  json out = {{"record_id", r.record_id},
              {"chief_complaint", r.chief_complaint},
              {"diagnoses", diagnoses},
              {"medications", meds},
              {"return_indicators", r.return_indicators},
              {"post_discharge_treatments", r.post_discharge_treatments},
              {"in_hospital_course", course},
              {"follow_up", fu}};
  if (r.raw_note) out["raw_note"] = *r.raw_note;
  return out;
}

namespace detail {
inline const json& require(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError("missing field '" + std::string(key) + "' in " + ctx);
  return *it;
}
}  // namespace detail

inline DischargeRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("record must be an object");
  DischargeRecord r;
  r.record_id = detail::require(j, "record_id", "record").get<std::string>();
  const std::string ctx = "record '" + r.record_id + "'";
  r.chief_complaint = detail::require(j, "chief_complaint", ctx).get<std::string>();
  for (const auto& d : detail::require(j, "diagnoses", ctx)) {
    r.diagnoses.push_back(
        {detail::require(d, "name", ctx).get<std::string>(),
         diagnosis_kind_from_string(detail::require(d, "kind", ctx).get<std::string>())});
  }
  for (const auto& m : detail::require(j, "medications", ctx)) {
    MedicationOrder med;
    med.name = detail::require(m, "name", ctx).get<std::string>();
    med.dose = m.value("dose", "");
    med.route = m.value("route", "");
    med.frequency = detail::require(m, "frequency", ctx).get<std::string>();
    med.purpose = m.value("purpose", "");
    med.prn = m.value("prn", false);
    r.medications.push_back(std::move(med));
  }
  r.return_indicators =
      detail::require(j, "return_indicators", ctx).get<std::vector<std::string>>();
  r.post_discharge_treatments =
      detail::require(j, "post_discharge_treatments", ctx).get<std::vector<std::string>>();
  for (const auto& c : detail::require(j, "in_hospital_course", ctx)) {
    r.in_hospital_course.push_back({detail::require(c, "event", ctx).get<std::string>(),
                                    c.value("result", "")});
  }
  for (const auto& f : detail::require(j, "follow_up", ctx)) {
    r.follow_up.push_back({detail::require(f, "provider", ctx).get<std::string>(),
                           f.value("timing", ""), f.value("reason", "")});
  }
  if (j.contains("raw_note")) r.raw_note = j["raw_note"].get<std::string>();
  return r;
}

inline json to_json(const ExamQuestion& q) {
  json choices = json::array();
  for (const auto& c : q.choices)
    choices.push_back({{"text", c.text}, {"role", to_string(c.role)}});
  return {{"question_id", q.question_id},
          {"stem", q.stem},
          {"choices", choices},
          {"category", to_string(q.category)}};
}

inline ExamQuestion question_from_json(const json& j) {
  ExamQuestion q;
  q.question_id = detail::require(j, "question_id", "question").get<std::string>();
  const std::string ctx = "question '" + q.question_id + "'";
  q.stem = detail::require(j, "stem", ctx).get<std::string>();
  for (const auto& c : detail::require(j, "choices", ctx)) {
    q.choices.push_back(
        {detail::require(c, "text", ctx).get<std::string>(),
         choice_role_from_string(detail::require(c, "role", ctx).get<std::string>())});
  }
  q.category = stage_from_string(detail::require(j, "category", ctx).get<std::string>());
  return q;
}

inline json to_json(const ScenarioSet& set) {
  json out = json::array();
  for (const auto& s : set.scenarios) {
    out.push_back({{"record", to_json(s.record)},
                   {"reference_summary", s.reference_summary},
                   {"questions", [&] {
                      json qs = json::array();
                      for (const auto& q : s.questions) qs.push_back(to_json(q));
                      return qs;
                    }()}});
  }
  return out;
}

inline json to_json(const PatientProfile& p) {
  json sections = json::array();
  for (const auto& s : p.mask_policy.masked_sections) sections.push_back(s);
  return {{"health_literacy", to_string(p.health_literacy)},
          {"education", to_string(p.education)},
          {"emotion", to_string(p.emotion)},
          {"mask_policy",
           {{"masked_sections", sections},
            {"masking_mode", to_string(p.mask_policy.masking_mode)}}}};
}

// When mask_policy is absent the literacy default applies.
inline PatientProfile profile_from_json(const json& j) {
  PatientProfile p;
  p.health_literacy = literacy_from_string(
      detail::require(j, "health_literacy", "profile").get<std::string>());
  p.education =
      education_from_string(detail::require(j, "education", "profile").get<std::string>());
  p.emotion =
      emotion_from_string(detail::require(j, "emotion", "profile").get<std::string>());
  if (j.contains("mask_policy")) {
    const json& mp = j["mask_policy"];
    for (const auto& s : mp.value("masked_sections", json::array()))
      p.mask_policy.masked_sections.insert(s.get<std::string>());
    p.mask_policy.masking_mode =
        masking_mode_from_string(mp.value("masking_mode", "omit"));
  } else {
    p.mask_policy = default_mask_policy(p.health_literacy);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_record(const DischargeRecord& r) {
  if (r.record_id.empty()) throw ValidationError("record_id must be nonempty");
  const std::string ctx = "record '" + r.record_id + "'";
  bool has_primary = false;
  for (const auto& d : r.diagnoses) has_primary |= d.kind == DiagnosisKind::primary;
  if (!has_primary)
    throw ValidationError(ctx + ": at least one primary diagnosis required (field diagnoses)");
  for (const auto& m : r.medications) {
    if (m.name.empty())
      throw ValidationError(ctx + ": medication with empty name (field medications)");
    if (m.frequency.empty())
      throw ValidationError(ctx + ": medication '" + m.name +
                            "' has empty frequency (field medications)");
    if (m.prn) {
      // PRN frequency must carry the condition it is taken for.
      std::string f = " " + to_lower(m.frequency) + " ";
      bool conditional = contains(f, "as needed") || contains(f, " prn ") ||
                         contains(f, " if ") || contains(f, " for ") ||
                         contains(f, " when ");
      if (!conditional)
        throw ValidationError(ctx + ": prn medication '" + m.name +
                              "' frequency lacks a condition phrase (field medications)");
    }
  }
}

inline void validate_question(const ExamQuestion& q, const std::string& record_id) {
  const std::string ctx =
      "question '" + q.question_id + "' of record '" + record_id + "'";
  if (q.stem.empty()) throw ValidationError(ctx + ": empty stem");
  if (q.choices.size() != 3)
    throw ValidationError(ctx + ": expected exactly 3 choices, got " +
                          std::to_string(q.choices.size()));
  int roles[3] = {0, 0, 0};
  for (const auto& c : q.choices) ++roles[static_cast<int>(c.role)];
  if (roles[0] != 1 || roles[1] != 1 || roles[2] != 1)
    throw ValidationError(ctx + ": choices must be exactly one answer, one distractor, "
                          "one irrelevant");
}

inline void validate_scenario_set(const ScenarioSet& set) {
  std::set<std::string> ids;
  for (const auto& s : set.scenarios) {
    validate_record(s.record);
    const std::string& id = s.record.record_id;
    if (!ids.insert(id).second)
      throw ValidationError("duplicate record_id '" + id + "'");
    if (s.reference_summary.empty())
      throw ValidationError("record '" + id + "': reference_summary must be nonempty");
    if (s.questions.size() < 5)
      throw ValidationError("record '" + id + "': question count below 5 (got " +
                            std::to_string(s.questions.size()) + ")");
    if (s.questions.size() > 10)
      throw ValidationError("record '" + id + "': question count above 10 (got " +
                            std::to_string(s.questions.size()) + ")");
    std::set<std::string> qids;
    std::set<StageId> categories;
    for (const auto& q : s.questions) {
      validate_question(q, id);
      if (!qids.insert(q.question_id).second)
        throw ValidationError("record '" + id + "': duplicate question_id '" +
                              q.question_id + "'");
      categories.insert(q.category);
    }
    if (categories.size() < 2)
      throw ValidationError("record '" + id +
                            "': question categories must cover at least 2 stages");
  }
}

inline ScenarioSet parse_scenario_set(const json& doc) {
  if (!doc.is_array())
    throw ParseError("scenario file must be a top-level list of scenarios");
  ScenarioSet set;
  for (const auto& s : doc) {
    Scenario scenario;
    scenario.record = record_from_json(detail::require(s, "record", "scenario"));
    scenario.reference_summary =
        detail::require(s, "reference_summary",
                        "record '" + scenario.record.record_id + "'")
            .get<std::string>();
    for (const auto& q : detail::require(s, "questions",
                                         "record '" + scenario.record.record_id + "'"))
      scenario.questions.push_back(question_from_json(q));
    set.scenarios.push_back(std::move(scenario));
  }
  validate_scenario_set(set);
  return set;
}

inline ScenarioSet load_scenario_set(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte offset; keep it for locating the fault.
    throw ParseError("malformed scenario file " + path + ": " + e.what());
  }
  return parse_scenario_set(doc);
}

inline std::string serialize_scenario_set(const ScenarioSet& set) {
  return to_json(set).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Exam traceability check

// Canonical one-line rendering of each record item; also used by the gold
// checklist derivation so the two stay aligned.
inline std::string render_medication(const MedicationOrder& m) {
  return join_nonempty({m.name, m.dose, m.route, m.frequency});
}
inline std::string render_follow_up(const FollowUpItem& f) {
  return join_nonempty({f.provider, f.timing, f.reason});
}
inline std::string render_course_event(const CourseEvent& c) {
  return join_nonempty({c.event, c.result});
}

inline std::vector<std::string> record_text_items(const DischargeRecord& r) {
  std::vector<std::string> items;
  items.push_back(r.chief_complaint);
  for (const auto& d : r.diagnoses) items.push_back(d.name);
  for (const auto& m : r.medications)
    items.push_back(join_nonempty({m.name, m.dose, m.route, m.frequency, m.purpose}));
  for (const auto& s : r.return_indicators) items.push_back(s);
  for (const auto& s : r.post_discharge_treatments) items.push_back(s);
  for (const auto& c : r.in_hospital_course) items.push_back(render_course_event(c));
  for (const auto& f : r.follow_up) items.push_back(render_follow_up(f));
  if (r.raw_note) items.push_back(*r.raw_note);
  return items;
}

// Warns about answer choices whose normalized text is not a substring of any
// single record item. Heuristic only; never mutates, never throws.
inline std::vector<std::string> validate_exam(const std::vector<ExamQuestion>& questions,
                                              const DischargeRecord& record) {
  std::vector<std::string> warnings;
  std::vector<std::string> normalized_items;
  for (const auto& item : record_text_items(record))
    normalized_items.push_back(normalize_text(item));
  for (const auto& q : questions) {
    for (const auto& c : q.choices) {
      if (c.role != ChoiceRole::answer) continue;
      std::string needle = normalize_text(c.text);
      bool traceable = needle.empty();
      for (const auto& item : normalized_items) {
        if (contains(item, needle)) {
          traceable = true;
          break;
        }
      }
      if (!traceable)
        warnings.push_back("question '" + q.question_id + "': answer text not traceable to record '" +
                           record.record_id + "': \"" + c.text + "\"");
    }
  }
  return warnings;
}

// The full 2x3x3 profile grid, mask policies defaulted from literacy.
inline std::vector<PatientProfile> full_profile_grid() {
  std::vector<PatientProfile> grid;
  for (HealthLiteracy hl : {HealthLiteracy::low, HealthLiteracy::high})
    for (EducationLevel edu : {EducationLevel::edu1_no_hs, EducationLevel::edu2_hs_ged,
                               EducationLevel::edu3_college})
      for (EmotionStyle emo :
           {EmotionStyle::neutral, EmotionStyle::anxious, EmotionStyle::deflective})
        grid.push_back({hl, edu, emo, default_mask_policy(hl)});
  return grid;
}

}  // namespace dsim
