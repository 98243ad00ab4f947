#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/backend.hpp"
#include "dsim/engine.hpp"
#include "dsim/error.hpp"
#include "dsim/exam.hpp"
#include "dsim/rubrics.hpp"
#include "dsim/scenario.hpp"

namespace dsim {

struct MetricToggles {
  bool rouge_l = true;
  bool concept_prf = true;
  bool checklist_accuracy = true;
  bool any() const { return rouge_l || concept_prf || checklist_accuracy; }
};

struct RunConfig {
  std::string scenario_path;
  std::string lexicon_path;
  std::string output_dir = "runs";

  // Empty grid means the full 18-cell literacy x education x emotion sweep.
  std::vector<PatientProfile> profile_grid;

  StageConfig stage_config;

  BackendConfig doctor_backend;
  BackendConfig patient_backend;
  BackendConfig judge_backend;
  std::string doctor_model = "doctor-model";
  std::string patient_model = "patient-model";
  std::string judge_model = "judge-model";
  double doctor_temperature = 0.7;
  double patient_temperature = 0.7;

  std::vector<ExamCondition> exam_conditions = {ExamCondition::dialogue_only,
                                                ExamCondition::summary_only};
  std::vector<RubricId> rubrics = {kAllRubrics.begin(), kAllRubrics.end()};
  MetricToggles metrics;
  std::string external_scorer_cmd;  // optional similarity-scorer subprocess

  std::string rubric_dir;  // optional template overrides
  std::string prompt_dir;

  std::uint64_t seed = 0;
  int workers = 1;
  int runs_per_cell = 1;
  bool deterministic = false;
};

namespace detail {

inline std::vector<ExamCondition> exam_conditions_from(const std::string& s) {
  if (s == "both")
    return {ExamCondition::dialogue_only, ExamCondition::summary_only};
  if (s == "dialogue") return {ExamCondition::dialogue_only};
  if (s == "summary") return {ExamCondition::summary_only};
  throw ConfigError("unknown exam condition: " + s +
                    " (expected dialogue, summary, or both)");
}

}  // namespace detail

inline void validate_config(const RunConfig& cfg) {
  if (cfg.scenario_path.empty())
    throw ConfigError("config missing scenario_path");
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (cfg.runs_per_cell < 1) throw ConfigError("runs_per_cell must be at least 1");
  if (cfg.rubrics.empty() && !cfg.metrics.any())
    throw ConfigError(
        "config enables no evaluations: need at least one rubric or metric");
  if ((cfg.metrics.concept_prf || cfg.metrics.checklist_accuracy) &&
      cfg.lexicon_path.empty())
    throw ConfigError("concept metrics require lexicon_path");
  validate_stage_config(cfg.stage_config);
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  cfg.scenario_path = j.value("scenario_path", "");
  cfg.lexicon_path = j.value("lexicon_path", "");
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.runs_per_cell = j.value("runs_per_cell", cfg.runs_per_cell);
  cfg.deterministic = j.value("deterministic", cfg.deterministic);
  cfg.rubric_dir = j.value("rubric_dir", "");
  cfg.prompt_dir = j.value("prompt_dir", "");
  cfg.external_scorer_cmd = j.value("external_scorer_cmd", "");

  if (j.contains("profile_grid")) {
    const auto& grid = j.at("profile_grid");
    if (grid.is_string()) {
      if (grid.get<std::string>() != "full")
        throw ConfigError("profile_grid must be \"full\" or a list of profiles");
    } else if (grid.is_array()) {
      for (const auto& p : grid) cfg.profile_grid.push_back(profile_from_json(p));
      if (cfg.profile_grid.empty())
        throw ConfigError("profile_grid list must not be empty");
    } else {
      throw ConfigError("profile_grid must be \"full\" or a list of profiles");
    }
  }

  if (j.contains("stage_config")) {
    const auto& sc = j.at("stage_config");
    if (sc.contains("order")) {
      cfg.stage_config.order.clear();
      for (const auto& s : sc.at("order"))
        cfg.stage_config.order.push_back(stage_from_string(s.get<std::string>()));
    }
    cfg.stage_config.doctor_turn_cap =
        sc.value("doctor_turn_cap", cfg.stage_config.doctor_turn_cap);
    cfg.stage_config.medications_safety_cap =
        sc.value("medications_safety_cap", cfg.stage_config.medications_safety_cap);
    cfg.stage_config.advance_marker =
        sc.value("advance_marker", cfg.stage_config.advance_marker);
    if (sc.contains("per_stage_cap"))
      for (const auto& [key, value] : sc.at("per_stage_cap").items())
        cfg.stage_config.per_stage_cap[stage_from_string(key)] = value.get<int>();
  }

  if (j.contains("backends")) {
    const auto& b = j.at("backends");
    if (b.contains("doctor"))
      cfg.doctor_backend = backend_config_from_json(b.at("doctor"));
    if (b.contains("patient"))
      cfg.patient_backend = backend_config_from_json(b.at("patient"));
    if (b.contains("judge"))
      cfg.judge_backend = backend_config_from_json(b.at("judge"));
  }
  if (j.contains("models")) {
    const auto& m = j.at("models");
    cfg.doctor_model = m.value("doctor", cfg.doctor_model);
    cfg.patient_model = m.value("patient", cfg.patient_model);
    cfg.judge_model = m.value("judge", cfg.judge_model);
  }
  if (j.contains("temperatures")) {
    const auto& t = j.at("temperatures");
    cfg.doctor_temperature = t.value("doctor", cfg.doctor_temperature);
    cfg.patient_temperature = t.value("patient", cfg.patient_temperature);
  }

  if (j.contains("exam_conditions")) {
    const auto& e = j.at("exam_conditions");
    if (e.is_string()) {
      cfg.exam_conditions = detail::exam_conditions_from(e.get<std::string>());
    } else if (e.is_array()) {
      cfg.exam_conditions.clear();
      for (const auto& c : e)
        cfg.exam_conditions.push_back(
            exam_condition_from_string(c.get<std::string>()));
    } else {
      throw ConfigError("exam_conditions must be a string or list");
    }
  }

  if (j.contains("rubrics")) {
    const auto& r = j.at("rubrics");
    if (r.is_string()) {
      const std::string s = r.get<std::string>();
      if (s == "all") {
        cfg.rubrics.assign(kAllRubrics.begin(), kAllRubrics.end());
      } else if (s == "none") {
        cfg.rubrics.clear();
      } else {
        throw ConfigError("rubrics must be \"all\", \"none\", or a list of ids");
      }
    } else if (r.is_array()) {
      cfg.rubrics.clear();
      for (const auto& id : r)
        cfg.rubrics.push_back(rubric_from_string(id.get<std::string>()));
    } else {
      throw ConfigError("rubrics must be \"all\", \"none\", or a list of ids");
    }
  }

  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    cfg.metrics.rouge_l = m.value("rouge_l", cfg.metrics.rouge_l);
    cfg.metrics.concept_prf = m.value("concept_prf", cfg.metrics.concept_prf);
    cfg.metrics.checklist_accuracy =
        m.value("checklist_accuracy", cfg.metrics.checklist_accuracy);
  }

  validate_config(cfg);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

inline std::vector<PatientProfile> effective_profile_grid(const RunConfig& cfg) {
  if (cfg.profile_grid.empty()) return full_profile_grid();
  return cfg.profile_grid;
}

}  // namespace dsim
