#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dsim/artifacts.hpp"
#include "dsim/config.hpp"
#include "dsim/engine.hpp"
#include "dsim/error.hpp"
#include "dsim/exam.hpp"
#include "dsim/external_scorer.hpp"
#include "dsim/http_backend.hpp"
#include "dsim/judge.hpp"
#include "dsim/metrics.hpp"
#include "dsim/prompts.hpp"
#include "dsim/run_record.hpp"
#include "dsim/rubrics.hpp"
#include "dsim/scenario.hpp"

namespace dsim {

inline constexpr const char* kEpochTimestamp = "1970-01-01T00:00:00Z";

inline std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Run identity

// Stable per-run seed: a hash chain over the experiment seed and every
// coordinate of the cell, so reordering or parallelism cannot change it.
inline std::uint64_t derive_run_seed(std::uint64_t base_seed,
                                     const std::string& scenario_id,
                                     const PatientProfile& profile,
                                     const std::string& doctor_model,
                                     const std::string& patient_model,
                                     const std::string& judge_model, int rep) {
  std::uint64_t h = fnv1a64(std::to_string(base_seed));
  h = fnv1a64(scenario_id, h);
  h = fnv1a64(profile_key(profile), h);
  h = fnv1a64(doctor_model, h);
  h = fnv1a64(patient_model, h);
  h = fnv1a64(judge_model, h);
  h = fnv1a64("r" + std::to_string(rep), h);
  return h;
}

inline std::string sanitize_id_component(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' &&
        c != '-')
      c = '-';
  return s;
}

inline std::string make_run_id(const std::string& scenario_id,
                               const PatientProfile& profile,
                               const std::string& doctor_model, int rep) {
  return sanitize_id_component(scenario_id) + "__" + profile_key(profile) +
         "__" + sanitize_id_component(doctor_model) + "__r" +
         std::to_string(rep);
}

// ---------------------------------------------------------------------------
// Context: everything loaded once and shared (read-only) by the workers.

struct RunnerContext {
  RunConfig cfg;
  ScenarioSet scenarios;
  PromptLibrary prompts = PromptLibrary::with_defaults();
  RubricRegistry rubric_registry = RubricRegistry::with_defaults();
  std::optional<Lexicon> lexicon;
  std::shared_ptr<ExternalScorer> scorer;  // null unless a command is attached
  std::shared_ptr<Clock> clock = std::make_shared<SystemClock>();
};

inline RunnerContext make_runner_context(const RunConfig& cfg) {
  RunnerContext ctx;
  ctx.cfg = cfg;
  ctx.scenarios = load_scenario_set(cfg.scenario_path);
  validate_scenario_set(ctx.scenarios);
  if (!cfg.prompt_dir.empty()) ctx.prompts.load_overrides(cfg.prompt_dir);
  if (!cfg.rubric_dir.empty())
    ctx.rubric_registry.load_template_overrides(cfg.rubric_dir);
  if (!cfg.lexicon_path.empty()) ctx.lexicon = Lexicon::load(cfg.lexicon_path);
  if (!cfg.external_scorer_cmd.empty())
    ctx.scorer = std::make_shared<SubprocessScorer>(cfg.external_scorer_cmd);
  return ctx;
}

// ---------------------------------------------------------------------------
// One cell of the matrix, end to end. Every enabled evaluation ends up either
// as a value on the record or as a failure annotation; nothing is silently
// absent. Only configuration faults propagate out of here.

inline RunRecord execute_run(const RunnerContext& ctx, BackendRegistry& registry,
                             const Scenario& scenario,
                             const PatientProfile& profile, int rep,
                             std::uint64_t seed, const std::string& run_id) {
  const RunConfig& cfg = ctx.cfg;
  RunRecord rec;
  rec.run_id = run_id;
  rec.scenario_id = scenario.record.record_id;
  rec.profile = profile;
  rec.doctor_model = cfg.doctor_model;
  rec.patient_model = cfg.patient_model;
  rec.judge_model = cfg.judge_model;
  rec.seed = seed;
  rec.started_at = cfg.deterministic ? kEpochTimestamp : iso8601_utc_now();

  auto doctor = registry.make(cfg.doctor_backend, "doctor");
  auto patient = registry.make(cfg.patient_backend, "patient");
  auto judge = registry.make(cfg.judge_backend, "judge");

  EngineParams params;
  params.doctor_model = cfg.doctor_model;
  params.patient_model = cfg.patient_model;
  params.doctor_temperature = cfg.doctor_temperature;
  params.patient_temperature = cfg.patient_temperature;

  DialogueResult dialogue =
      run_dialogue(scenario.record, profile, *doctor, *patient, ctx.prompts,
                   cfg.stage_config, params, seed);
  rec.transcript = std::move(dialogue.transcript);
  if (dialogue.error) rec.failures.push_back({"dialogue", *dialogue.error});

  // Artifacts. A failed dialogue still has a partial transcript; downstream
  // stages run against whatever exists so the record stays complete.
  try {
    rec.summary = generate_summary(scenario.record, rec.transcript, profile,
                                   *doctor, ctx.prompts, cfg.doctor_model, seed,
                                   cfg.doctor_temperature)
                      .text;
  } catch (const TransportError& e) {
    rec.failures.push_back({"summary", e.what()});
  } catch (const ProviderError& e) {
    rec.failures.push_back({"summary", e.what()});
  } catch (const ParseError& e) {
    rec.failures.push_back({"summary", e.what()});
  }

  try {
    rec.checklist = generate_checklist(scenario.record, rec.transcript, *doctor,
                                       ctx.prompts, cfg.doctor_model, seed)
                        .doc;
  } catch (const TransportError& e) {
    rec.failures.push_back({"checklist", e.what()});
  } catch (const ProviderError& e) {
    rec.failures.push_back({"checklist", e.what()});
  } catch (const ParseError& e) {
    rec.failures.push_back({"checklist", e.what()});
  }

  rec.gold_checklist = derive_gold_checklist(scenario.record);

  // Comprehension exams. Per-question backend faults are absorbed inside
  // administer_exam; only structural problems (no questions, no summary)
  // surface here.
  for (ExamCondition condition : cfg.exam_conditions) {
    const std::string target = std::string("exam:") + to_string(condition);
    try {
      if (condition == ExamCondition::dialogue_only) {
        rec.exams[condition] = administer_exam(
            scenario.questions, condition, rec.transcript, profile, *patient,
            ctx.prompts, cfg.patient_model, seed);
      } else {
        if (!rec.summary)
          throw ValidationError("summary unavailable for summary-condition exam");
        SummaryResult summary{*rec.summary};
        rec.exams[condition] = administer_exam(
            scenario.questions, condition, summary, profile, *patient,
            ctx.prompts, cfg.patient_model, seed);
      }
    } catch (const ValidationError& e) {
      rec.failures.push_back({target, e.what()});
    }
  }

  // Judge rubrics.
  const std::string transcript_text = transcript_to_text(rec.transcript);
  const std::string gold_text = record_to_prompt_text(scenario.record);
  for (RubricId id : cfg.rubrics) {
    const RubricDef& def = ctx.rubric_registry.get(id);
    const std::string target = std::string("rubric:") + to_string(id);

    JudgeInputs inputs;
    bool missing_input = false;
    for (const auto& slot : def.required_inputs()) {
      if (slot == "transcript") {
        inputs[slot] = transcript_text;
      } else if (slot == "gold_record") {
        inputs[slot] = gold_text;
      } else if (slot == "reference_summary") {
        inputs[slot] = scenario.reference_summary;
      } else if (slot == "summary") {
        if (!rec.summary) {
          rec.failures.push_back({target, "summary unavailable for judging"});
          missing_input = true;
          break;
        }
        inputs[slot] = *rec.summary;
      } else {
        rec.failures.push_back({target, "no value for judge input '" + slot + "'"});
        missing_input = true;
        break;
      }
    }
    if (missing_input) continue;
    inputs["profile"] =
        "Patient profile: " + profile_summary_for_doctor(profile);

    RubricOutcome outcome =
        evaluate_rubric(def, inputs, *judge, cfg.judge_model, seed);
    if (outcome.score)
      rec.rubric_scores[id] = std::move(*outcome.score);
    else
      rec.failures.push_back(
          {target, outcome.error.value_or("judge produced no score")});
  }

  // Closed-form metrics.
  if (cfg.metrics.rouge_l) {
    if (rec.summary)
      rec.rouge = rouge_l(*rec.summary, scenario.reference_summary);
    else
      rec.failures.push_back({"metric:rouge_l", "summary unavailable"});
  }
  if (cfg.metrics.concept_prf) {
    if (rec.summary)
      rec.concepts =
          concept_prf(*rec.summary, scenario.reference_summary, *ctx.lexicon);
    else
      rec.failures.push_back({"metric:concept_prf", "summary unavailable"});
  }
  if (cfg.metrics.checklist_accuracy) {
    if (rec.checklist) {
      try {
        rec.checklist_acc =
            checklist_accuracy(*rec.checklist, rec.gold_checklist, *ctx.lexicon);
      } catch (const DegenerateInputError& e) {
        rec.failures.push_back({"metric:checklist_accuracy", e.what()});
      }
    } else {
      rec.failures.push_back(
          {"metric:checklist_accuracy", "checklist unavailable"});
    }
  }
  if (ctx.scorer) {
    if (rec.summary) {
      try {
        rec.external_score =
            ctx.scorer->score(*rec.summary, scenario.reference_summary);
      } catch (const TransportError& e) {
        rec.failures.push_back({"metric:external", e.what()});
      } catch (const ProviderError& e) {
        rec.failures.push_back({"metric:external", e.what()});
      } catch (const ParseError& e) {
        rec.failures.push_back({"metric:external", e.what()});
      }
    } else {
      rec.failures.push_back({"metric:external", "summary unavailable"});
    }
  }

  rec.finished_at = cfg.deterministic ? kEpochTimestamp : iso8601_utc_now();
  return rec;
}

// ---------------------------------------------------------------------------
// Matrix driver

struct ExperimentResult {
  std::vector<RunRecord> records;  // in matrix order
  std::string runs_path;
};

namespace detail {

// Collects results completed out of order by a worker pool and appends each
// line to the log the moment every earlier line is already written, so the
// file is byte-identical for any worker count.
class OrderedAppender {
 public:
  OrderedAppender(std::ostream& out, std::size_t total)
      : out_(out), lines_(total) {}

  void submit(std::size_t index, std::string line) {
    std::lock_guard lock(mu_);
    lines_[index] = std::move(line);
    while (next_ < lines_.size() && lines_[next_]) {
      out_ << *lines_[next_] << '\n';
      lines_[next_].reset();
      ++next_;
    }
    out_.flush();
  }

 private:
  std::ostream& out_;
  std::vector<std::optional<std::string>> lines_;
  std::size_t next_ = 0;
  std::mutex mu_;
};

}  // namespace detail

inline ExperimentResult run_experiment(const RunnerContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::vector<PatientProfile> grid = effective_profile_grid(cfg);

  struct Cell {
    const Scenario* scenario;
    PatientProfile profile;
    int rep;
    std::uint64_t seed;
    std::string run_id;
  };
  std::vector<Cell> cells;
  for (const Scenario& scenario : ctx.scenarios.scenarios)
    for (const PatientProfile& profile : grid)
      for (int rep = 0; rep < cfg.runs_per_cell; ++rep)
        cells.push_back(
            {&scenario, profile, rep,
             derive_run_seed(cfg.seed, scenario.record.record_id, profile,
                             cfg.doctor_model, cfg.patient_model,
                             cfg.judge_model, rep),
             make_run_id(scenario.record.record_id, profile, cfg.doctor_model,
                         rep)});

  std::filesystem::create_directories(cfg.output_dir);
  const std::string runs_path =
      (std::filesystem::path(cfg.output_dir) / "runs.jsonl").string();
  std::ofstream out(runs_path, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot open run log: " + runs_path);

  detail::OrderedAppender appender(out, cells.size());
  std::vector<RunRecord> records(cells.size());
  BackendRegistry registry(ctx.clock);

  std::atomic<std::size_t> cursor{0};
  std::exception_ptr first_fault;
  std::mutex fault_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      try {
        RunRecord rec = execute_run(ctx, registry, *cell.scenario, cell.profile,
                                    cell.rep, cell.seed, cell.run_id);
        appender.submit(i, to_json(rec, ctx.rubric_registry).dump());
        records[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(fault_mu);
        if (!first_fault) first_fault = std::current_exception();
        // Keep the log well-ordered even when a cell dies on a config fault.
        appender.submit(i, std::string());
        return;
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_fault) std::rethrow_exception(first_fault);

  return {std::move(records), runs_path};
}

// Reads a runs.jsonl back into records; blank lines are skipped.
inline std::vector<RunRecord> load_run_records(const std::string& path,
                                               const RubricRegistry& rubrics) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open run log: " + path);
  std::vector<RunRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(run_record_from_json(nlohmann::json::parse(line), rubrics));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + " line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return records;
}

}  // namespace dsim
