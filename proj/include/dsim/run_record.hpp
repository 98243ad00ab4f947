#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/artifacts.hpp"
#include "dsim/engine.hpp"
#include "dsim/exam.hpp"
#include "dsim/judge.hpp"
#include "dsim/metrics.hpp"
#include "dsim/rubrics.hpp"
#include "dsim/scenario.hpp"

namespace dsim {

// A run-level evaluation that could not produce a value. Every enabled
// evaluation appears in the record either as a value or as one of these.
struct GapAnnotation {
  std::string target;   // e.g. "dialogue", "summary", "rubric:content_coverage"
  std::string message;
  bool operator==(const GapAnnotation&) const = default;
};

struct RubricRecord {
  RubricScore score;
};

// One row of evidence: everything produced and measured for a single
// (scenario, profile, model-triple, repetition) cell.
struct RunRecord {
  std::string run_id;
  std::string scenario_id;
  PatientProfile profile;
  std::string doctor_model;
  std::string patient_model;
  std::string judge_model;

  Transcript transcript;
  std::optional<std::string> summary;
  std::optional<ChecklistDoc> checklist;
  ChecklistDoc gold_checklist;
  std::map<ExamCondition, ExamResult> exams;
  std::map<RubricId, RubricScore> rubric_scores;

  std::optional<PRF> rouge;
  std::optional<ConceptPrf> concepts;
  std::optional<double> checklist_acc;
  std::optional<double> external_score;

  std::vector<GapAnnotation> failures;
  std::string started_at;   // ISO 8601 UTC; fixed epoch in deterministic mode
  std::string finished_at;
  std::uint64_t seed = 0;

  bool has_failure(const std::string& target) const {
    for (const auto& f : failures)
      if (f.target == target) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// Wire format. nlohmann::json objects serialize with sorted keys, so a record
// dumps byte-identically regardless of field insertion order.

inline nlohmann::json to_json(const RunRecord& r, const RubricRegistry& rubrics) {
  nlohmann::json j;
  j["run_id"] = r.run_id;
  j["scenario_id"] = r.scenario_id;
  j["profile"] = to_json(r.profile);
  j["models"] = {{"doctor", r.doctor_model},
                 {"patient", r.patient_model},
                 {"judge", r.judge_model}};
  j["transcript"] = to_json(r.transcript);
  if (r.summary) j["summary"] = *r.summary;
  if (r.checklist) j["checklist"] = to_json(*r.checklist);
  j["gold_checklist"] = to_json(r.gold_checklist);

  nlohmann::json exams = nlohmann::json::object();
  for (const auto& [condition, result] : r.exams)
    exams[to_string(condition)] = to_json(result);
  j["exams"] = exams;

  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [id, score] : r.rubric_scores) {
    scores[to_string(id)] = {
        {"output", rubric_score_to_json(score, rubrics.get(id))},
        {"parse_attempts", score.parse_attempts},
        {"warnings", score.warnings}};
  }
  j["rubric_scores"] = scores;

  nlohmann::json metrics = nlohmann::json::object();
  if (r.rouge)
    metrics["rouge_l"] = {{"precision", r.rouge->precision},
                          {"recall", r.rouge->recall},
                          {"f1", r.rouge->f1}};
  if (r.concepts)
    metrics["concept_prf"] = {{"precision", r.concepts->prf.precision},
                              {"recall", r.concepts->prf.recall},
                              {"f1", r.concepts->prf.f1},
                              {"degenerate_ref", r.concepts->degenerate_ref},
                              {"degenerate_gen", r.concepts->degenerate_gen}};
  if (r.checklist_acc) metrics["checklist_accuracy"] = *r.checklist_acc;
  if (r.external_score) metrics["external_score"] = *r.external_score;
  j["metrics"] = metrics;

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures)
    failures.push_back({{"target", f.target}, {"message", f.message}});
  j["failures"] = failures;
  j["started_at"] = r.started_at;
  j["finished_at"] = r.finished_at;
  j["seed"] = r.seed;
  return j;
}

inline ChecklistDoc checklist_doc_from_json(const nlohmann::json& j) {
  ChecklistDoc doc = empty_checklist();
  for (StageId s : kAllStages) {
    const char* key = to_string(s);
    if (j.contains(key)) doc[s] = j[key].get<std::vector<std::string>>();
  }
  return doc;
}

inline RunRecord run_record_from_json(const nlohmann::json& j,
                                      const RubricRegistry& rubrics) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.scenario_id = j.at("scenario_id").get<std::string>();
  r.profile = profile_from_json(j.at("profile"));
  r.doctor_model = j.at("models").at("doctor").get<std::string>();
  r.patient_model = j.at("models").at("patient").get<std::string>();
  r.judge_model = j.at("models").at("judge").get<std::string>();
  r.transcript = transcript_from_json(j.at("transcript"));
  if (j.contains("summary")) r.summary = j["summary"].get<std::string>();
  if (j.contains("checklist")) r.checklist = checklist_doc_from_json(j["checklist"]);
  r.gold_checklist = checklist_doc_from_json(j.at("gold_checklist"));

  for (const auto& [key, value] : j.at("exams").items())
    r.exams[exam_condition_from_string(key)] = exam_result_from_json(value);

  for (const auto& [key, value] : j.at("rubric_scores").items()) {
    RubricId id = rubric_from_string(key);
    RubricScore score =
        parse_rubric_response(value.at("output").dump(), rubrics.get(id));
    score.parse_attempts = value.value("parse_attempts", 1);
    score.warnings = value.value("warnings", std::vector<std::string>{});
    r.rubric_scores[id] = std::move(score);
  }

  const auto& metrics = j.at("metrics");
  if (metrics.contains("rouge_l")) {
    const auto& m = metrics["rouge_l"];
    r.rouge = PRF{m.at("precision").get<double>(), m.at("recall").get<double>(),
                  m.at("f1").get<double>()};
  }
  if (metrics.contains("concept_prf")) {
    const auto& m = metrics["concept_prf"];
    ConceptPrf cp;
    cp.prf = PRF{m.at("precision").get<double>(), m.at("recall").get<double>(),
                 m.at("f1").get<double>()};
    cp.degenerate_ref = m.value("degenerate_ref", false);
    cp.degenerate_gen = m.value("degenerate_gen", false);
    r.concepts = cp;
  }
  if (metrics.contains("checklist_accuracy"))
    r.checklist_acc = metrics["checklist_accuracy"].get<double>();
  if (metrics.contains("external_score"))
    r.external_score = metrics["external_score"].get<double>();

  for (const auto& f : j.at("failures"))
    r.failures.push_back(
        {f.at("target").get<std::string>(), f.at("message").get<std::string>()});
  r.started_at = j.value("started_at", "");
  r.finished_at = j.value("finished_at", "");
  r.seed = j.value("seed", 0ull);
  return r;
}

}  // namespace dsim
