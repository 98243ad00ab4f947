#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsim/dsim.hpp"

namespace {

std::map<std::string, double> parse_size_overrides(
    const std::vector<std::string>& entries) {
  std::map<std::string, double> out;
  for (const auto& entry : entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw dsim::ConfigError("bad --sizes entry '" + entry +
                              "' (expected model=billions)");
    try {
      out[entry.substr(0, eq)] = std::stod(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw dsim::ConfigError("bad --sizes entry '" + entry +
                              "' (expected model=billions)");
    }
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& scenarios,
            const std::string& doctor_model, const std::string& patient_model,
            const std::string& judge_model, int workers,
            const std::string& exam_condition, const std::string& rubric_dir,
            const std::string& prompt_dir, const std::string& output_dir,
            long long seed, bool seed_set, bool deterministic) {
  dsim::RunConfig cfg = dsim::load_config(config_path);
  if (!scenarios.empty()) cfg.scenario_path = scenarios;
  if (!doctor_model.empty()) cfg.doctor_model = doctor_model;
  if (!patient_model.empty()) cfg.patient_model = patient_model;
  if (!judge_model.empty()) cfg.judge_model = judge_model;
  if (workers > 0) cfg.workers = workers;
  if (!exam_condition.empty())
    cfg.exam_conditions = dsim::detail::exam_conditions_from(exam_condition);
  if (!rubric_dir.empty()) cfg.rubric_dir = rubric_dir;
  if (!prompt_dir.empty()) cfg.prompt_dir = prompt_dir;
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (seed_set) cfg.seed = static_cast<std::uint64_t>(seed);
  if (deterministic) cfg.deterministic = true;
  dsim::validate_config(cfg);

  dsim::RunnerContext ctx = dsim::make_runner_context(cfg);
  dsim::ExperimentResult result = dsim::run_experiment(ctx);
  std::cout << "wrote " << result.records.size() << " run records to "
            << result.runs_path << "\n";

  dsim::ReportPaths paths =
      dsim::write_reports(result.records, ctx.rubric_registry, cfg.output_dir);
  std::cout << "reports: " << paths.conversation_txt << ", "
            << paths.summary_txt << "\n";
  return 0;
}

// --runs accepts the run directory or the runs.jsonl file inside it.
struct RunsLocation {
  std::string log_path;
  std::string dir;
};

RunsLocation resolve_runs(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) return {path + "/runs.jsonl", path};
  return {path, fs::path(path).parent_path().string()};
}

int cmd_report(const std::string& runs_arg) {
  const dsim::RubricRegistry rubrics = dsim::RubricRegistry::with_defaults();
  const RunsLocation runs = resolve_runs(runs_arg);
  std::vector<dsim::RunRecord> records =
      dsim::load_run_records(runs.log_path, rubrics);
  dsim::ReportPaths paths = dsim::write_reports(records, rubrics, runs.dir);

  std::cout << "Conversation evaluation (cohort means over runs)\n\n"
            << dsim::to_grid(dsim::build_conversation_table(records, rubrics))
            << "\nSummary evaluation (cohort means over runs)\n\n"
            << dsim::to_grid(dsim::build_summary_table(records, rubrics))
            << "\n"
            << dsim::kChecklistAccuracyNote << "\n"
            << "\nwritten: " << paths.conversation_csv << ", "
            << paths.summary_csv << "\n";
  return 0;
}

int cmd_analyze(const std::string& runs_arg, const std::string& contrast,
                const std::vector<std::string>& sizes,
                const std::vector<std::string>& exclude, bool log_scale) {
  const dsim::RubricRegistry rubrics = dsim::RubricRegistry::with_defaults();
  const RunsLocation runs = resolve_runs(runs_arg);
  std::vector<dsim::RunRecord> records =
      dsim::load_run_records(runs.log_path, rubrics);

  std::set<std::string> exclusions = dsim::default_size_exclusions();
  for (const auto& e : exclude) exclusions.insert(e);

  dsim::SensitivityReport report = dsim::build_sensitivity_report(
      records, dsim::contrast_from_string(contrast), exclusions,
      parse_size_overrides(sizes), log_scale);

  const std::string out_path =
      runs.dir + "/sensitivity_" + report.contrast + ".json";
  dsim::write_file(out_path, dsim::to_json(report).dump(2) + "\n");
  std::cout << dsim::render_sensitivity_text(report) << "\nwritten: " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Staged discharge-education dialogue simulator and evaluation harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Execute the experiment matrix");
  std::string config_path, scenarios, doctor_model, patient_model, judge_model;
  std::string exam_condition, rubric_dir, prompt_dir, output_dir;
  int workers = 0;
  long long seed = 0;
  bool deterministic = false;
  run->add_option("--config", config_path, "Run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--scenarios", scenarios, "Override scenario_path");
  run->add_option("--doctor-model", doctor_model, "Override doctor model id");
  run->add_option("--patient-model", patient_model, "Override patient model id");
  run->add_option("--judge-model", judge_model, "Override judge model id");
  run->add_option("--workers", workers, "Override worker count");
  run->add_option("--exam-condition", exam_condition,
                  "Exam context: dialogue, summary, or both")
      ->check(CLI::IsMember({"dialogue", "summary", "both"}));
  run->add_option("--rubric-dir", rubric_dir, "Judge template override dir");
  run->add_option("--prompt-dir", prompt_dir, "Agent prompt override dir");
  run->add_option("--output-dir", output_dir, "Override output_dir");
  auto* seed_opt = run->add_option("--seed", seed, "Override experiment seed");
  run->add_flag("--deterministic", deterministic,
                "Fixed timestamps for byte-identical logs");

  // report
  auto* report = app.add_subcommand("report", "Render tables from a run log");
  std::string report_runs;
  report->add_option("--runs", report_runs,
                     "Run directory or runs.jsonl file")
      ->required()
      ->check(CLI::ExistingPath);

  // analyze
  auto* analyze =
      app.add_subcommand("analyze", "Profile-sensitivity analysis over a run log");
  std::string analyze_runs, contrast;
  std::vector<std::string> sizes, exclude;
  bool log_scale = false;
  analyze->add_option("--runs", analyze_runs,
                      "Run directory or runs.jsonl file")
      ->required()
      ->check(CLI::ExistingPath);
  analyze->add_option("--contrast", contrast, "hl, edu, or emotion")
      ->required()
      ->check(CLI::IsMember({"hl", "edu", "emotion"}));
  analyze->add_option("--sizes", sizes,
                      "Model size overrides, model=billions (repeatable)");
  analyze->add_option("--exclude", exclude,
                      "Extra model ids excluded from size correlations");
  analyze->add_flag("--log-scale", log_scale,
                    "Correlate against log parameter count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run)
      return cmd_run(config_path, scenarios, doctor_model, patient_model,
                     judge_model, workers, exam_condition, rubric_dir,
                     prompt_dir, output_dir, seed, seed_opt->count() > 0,
                     deterministic);
    if (*report) return cmd_report(report_runs);
    if (*analyze)
      return cmd_analyze(analyze_runs, contrast, sizes, exclude, log_scale);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
