#include <doctest.h>

#include <set>

#include "dsim/scenario.hpp"

using namespace dsim;

namespace {

DischargeRecord minimal_record() {
  DischargeRecord r;
  r.record_id = "rec-1";
  r.chief_complaint = "cough";
  r.diagnoses = {{"pneumonia", DiagnosisKind::primary}};
  MedicationOrder m;
  m.name = "amoxicillin";
  m.frequency = "twice daily";
  r.medications = {m};
  r.return_indicators = {"high fever"};
  r.post_discharge_treatments = {"rest"};
  r.in_hospital_course = {{"chest x-ray", "infiltrate"}};
  r.follow_up = {{"primary care physician", "in 7 days", "recheck"}};
  return r;
}

ExamQuestion minimal_question(const std::string& id, StageId category) {
  ExamQuestion q;
  q.question_id = id;
  q.stem = "what?";
  q.choices = {{"right", ChoiceRole::answer},
               {"wrong", ChoiceRole::distractor},
               {"off-topic", ChoiceRole::irrelevant}};
  q.category = category;
  return q;
}

}  // namespace

TEST_CASE("record JSON round-trips") {
  DischargeRecord r = minimal_record();
  r.raw_note = "free text note";
  DischargeRecord back = record_from_json(to_json(r));
  CHECK(back.record_id == r.record_id);
  CHECK(back.diagnoses.size() == 1);
  CHECK(back.medications[0].name == "amoxicillin");
  CHECK(back.raw_note == r.raw_note);
  CHECK(to_json(back) == to_json(r));
}

TEST_CASE("record parse errors name the missing field and context") {
  nlohmann::json j = to_json(minimal_record());
  j.erase("chief_complaint");
  CHECK_THROWS_WITH_AS(record_from_json(j),
                       doctest::Contains("chief_complaint"), ParseError);
  CHECK_THROWS_WITH_AS(record_from_json(j), doctest::Contains("rec-1"),
                       ParseError);
}

TEST_CASE("medication defaults apply but name and frequency are required") {
  nlohmann::json j = to_json(minimal_record());
  j["medications"][0].erase("dose");
  j["medications"][0].erase("route");
  DischargeRecord r = record_from_json(j);
  CHECK(r.medications[0].dose.empty());

  j["medications"][0].erase("frequency");
  CHECK_THROWS_AS(record_from_json(j), ParseError);
}

TEST_CASE("validate_record enforces the invariants") {
  CHECK_NOTHROW(validate_record(minimal_record()));

  SUBCASE("a primary diagnosis is required") {
    DischargeRecord r = minimal_record();
    r.diagnoses = {{"hypertension", DiagnosisKind::secondary}};
    CHECK_THROWS_AS(validate_record(r), ValidationError);
  }
  SUBCASE("prn medications need a condition phrase in the frequency") {
    DischargeRecord r = minimal_record();
    r.medications[0].prn = true;
    r.medications[0].frequency = "twice daily";
    CHECK_THROWS_AS(validate_record(r), ValidationError);
    r.medications[0].frequency = "every 6 hours as needed";
    CHECK_NOTHROW(validate_record(r));
    r.medications[0].frequency = "when short of breath";
    CHECK_NOTHROW(validate_record(r));
  }
}

TEST_CASE("memory mask omit clears and blur substitutes lay phrases") {
  DischargeRecord r = minimal_record();
  PatientProfile p;
  p.mask_policy.masked_sections = {"diagnoses", "medications"};

  SUBCASE("omit") {
    p.mask_policy.masking_mode = MaskingMode::omit;
    PatientView v = apply_memory_mask(r, p);
    CHECK(v.diagnoses.empty());
    CHECK(v.medications.empty());
    CHECK(v.return_indicators == r.return_indicators);  // untouched
  }
  SUBCASE("blur is idempotent") {
    p.mask_policy.masking_mode = MaskingMode::blur_to_lay_phrase;
    PatientView v1 = apply_memory_mask(r, p);
    REQUIRE(v1.diagnoses.size() == 1);
    CHECK(v1.diagnoses[0].name != "pneumonia");
    PatientView v2 = apply_memory_mask(v1, p);
    CHECK(v2.diagnoses[0].name == v1.diagnoses[0].name);
  }
  SUBCASE("unknown section is a configuration error") {
    p.mask_policy.masked_sections = {"allergies"};
    CHECK_THROWS_WITH_AS(apply_memory_mask(r, p), doctest::Contains("allergies"),
                         ConfigError);
  }
  SUBCASE("raw_note never reaches the patient view") {
    r.raw_note = "internal";
    PatientView v = apply_memory_mask(r, PatientProfile{});
    CHECK_FALSE(v.raw_note.has_value());
  }
}

TEST_CASE("low literacy defaults to blurred diagnosis and course memory") {
  PatientProfile p;
  p.health_literacy = HealthLiteracy::low;
  p.mask_policy = default_mask_policy(HealthLiteracy::low);
  CHECK(p.mask_policy.masked_sections.count("diagnoses") == 1);
  CHECK(p.mask_policy.masked_sections.count("in_hospital_course") == 1);
  CHECK(p.mask_policy.masking_mode == MaskingMode::blur_to_lay_phrase);
  CHECK(default_mask_policy(HealthLiteracy::high).masked_sections.empty());
}

TEST_CASE("the full profile grid covers all 18 combinations exactly once") {
  auto grid = full_profile_grid();
  REQUIRE(grid.size() == 18);
  std::set<std::string> keys;
  for (const auto& p : grid) keys.insert(profile_key(p));
  CHECK(keys.size() == 18);
  CHECK(keys.count("hl-low_edu1_no_hs_anxious") == 1);
  CHECK(keys.count("hl-high_edu3_college_neutral") == 1);
}

TEST_CASE("profile JSON round-trips and mask default applies when absent") {
  PatientProfile p;
  p.health_literacy = HealthLiteracy::low;
  p.education = EducationLevel::edu2_hs_ged;
  p.emotion = EmotionStyle::anxious;
  p.mask_policy = default_mask_policy(p.health_literacy);
  PatientProfile back = profile_from_json(to_json(p));
  CHECK(profile_key(back) == profile_key(p));
  CHECK(back.mask_policy.masked_sections == p.mask_policy.masked_sections);

  nlohmann::json j = to_json(p);
  j.erase("mask_policy");
  PatientProfile defaulted = profile_from_json(j);
  CHECK(defaulted.mask_policy.masked_sections ==
        default_mask_policy(HealthLiteracy::low).masked_sections);
}

TEST_CASE("scenario set validation") {
  Scenario s;
  s.record = minimal_record();
  s.reference_summary = "summary text";
  for (int i = 0; i < 5; ++i)
    s.questions.push_back(minimal_question("q" + std::to_string(i),
                                           i % 2 ? StageId::medications
                                                 : StageId::diagnosis));
  ScenarioSet set;
  set.scenarios = {s};
  CHECK_NOTHROW(validate_scenario_set(set));

  SUBCASE("question count below 5") {
    set.scenarios[0].questions.resize(4);
    CHECK_THROWS_WITH_AS(validate_scenario_set(set),
                         doctest::Contains("below 5 (got 4)"), ValidationError);
  }
  SUBCASE("question count above 10") {
    for (int i = 5; i < 11; ++i)
      set.scenarios[0].questions.push_back(
          minimal_question("q" + std::to_string(i), StageId::follow_up));
    CHECK_THROWS_WITH_AS(validate_scenario_set(set), doctest::Contains("above 10"),
                         ValidationError);
  }
  SUBCASE("duplicate record ids rejected") {
    set.scenarios.push_back(s);
    CHECK_THROWS_AS(validate_scenario_set(set), ValidationError);
  }
  SUBCASE("questions must span at least two stages") {
    for (auto& q : set.scenarios[0].questions) q.category = StageId::diagnosis;
    CHECK_THROWS_AS(validate_scenario_set(set), ValidationError);
  }
  SUBCASE("each question carries exactly one answer, distractor, irrelevant") {
    set.scenarios[0].questions[0].choices[1].role = ChoiceRole::answer;
    CHECK_THROWS_AS(validate_scenario_set(set), ValidationError);
  }
}

TEST_CASE("scenario file must be a top-level list") {
  CHECK_THROWS_WITH_AS(parse_scenario_set(nlohmann::json::object()),
                       doctest::Contains("top-level list"), ParseError);
}

TEST_CASE("the bundled synthetic scenario set loads and validates") {
  ScenarioSet set = load_scenario_set(
      std::string(DSIM_REPO_DIR) + "/assets/scenarios/synthetic_scenarios.json");
  CHECK_NOTHROW(validate_scenario_set(set));
  REQUIRE(set.scenarios.size() == 2);
  // Answer texts trace back to the record so comprehension is measurable.
  for (const auto& s : set.scenarios)
    CHECK(validate_exam(s.questions, s.record).empty());
}

TEST_CASE("serialization round-trips the bundled set byte-identically") {
  const std::string path =
      std::string(DSIM_REPO_DIR) + "/assets/scenarios/synthetic_scenarios.json";
  ScenarioSet set = load_scenario_set(path);
  ScenarioSet again = parse_scenario_set(nlohmann::json::parse(
      serialize_scenario_set(set)));
  CHECK(serialize_scenario_set(again) == serialize_scenario_set(set));
}
