#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsim/error.hpp"
#include "dsim/metrics.hpp"
#include "dsim/run_record.hpp"

namespace dsim {

// The six per-run evaluation dimensions the sensitivity analyses range over:
// the four conversation rubric aggregates plus the two summary rubric
// aggregates.
inline const std::vector<std::string>& analysis_dimensions() {
  static const std::vector<std::string> kDims = {
      "Language and Delivery",       "Human-Centered Communication",
      "Content",                     "Strategy",
      "Language and Appropriateness", "Factuality and Completeness"};
  return kDims;
}

inline std::string dimension_for_rubric(RubricId id) {
  switch (id) {
    case RubricId::language_delivery: return "Language and Delivery";
    case RubricId::human_centered: return "Human-Centered Communication";
    case RubricId::content_coverage: return "Content";
    case RubricId::education_strategy: return "Strategy";
    case RubricId::summary_group_a: return "Language and Appropriateness";
    case RubricId::summary_group_b: return "Factuality and Completeness";
  }
  throw ValidationError("bad RubricId");
}

struct ModelResult {
  std::string model_id;
  std::optional<double> param_count_billions;
  std::map<std::string, double> dimension_scores;
};

// model -> dimension -> value
using DiffTable = std::map<std::string, std::map<std::string, double>>;

// ---------------------------------------------------------------------------
// Core operations

// Elementwise (b - a) / a over two cohorts of the same models and dimensions.
inline DiffTable relative_difference(const std::vector<ModelResult>& cohort_a,
                                     const std::vector<ModelResult>& cohort_b) {
  std::map<std::string, const ModelResult*> by_id;
  for (const auto& m : cohort_b) by_id[m.model_id] = &m;
  if (cohort_a.size() != cohort_b.size() || cohort_a.empty())
    throw ValidationError("relative difference requires matching nonempty cohorts");
  DiffTable diffs;
  for (const auto& a : cohort_a) {
    auto it = by_id.find(a.model_id);
    if (it == by_id.end())
      throw ValidationError("model '" + a.model_id + "' missing from second cohort");
    const ModelResult& b = *it->second;
    if (a.dimension_scores.size() != b.dimension_scores.size())
      throw ValidationError("dimension sets differ for model '" + a.model_id + "'");
    for (const auto& [dim, a_score] : a.dimension_scores) {
      auto bt = b.dimension_scores.find(dim);
      if (bt == b.dimension_scores.end())
        throw ValidationError("dimension '" + dim + "' missing for model '" +
                              a.model_id + "' in second cohort");
      if (a_score == 0.0)
        throw DegenerateInputError("relative difference undefined for model '" +
                                   a.model_id + "' dimension '" + dim +
                                   "': baseline is 0");
      diffs[a.model_id][dim] = (bt->second - a_score) / a_score;
    }
  }
  return diffs;
}

// Population standard deviation (divisor n) of each dimension's relative
// difference across models.
inline std::map<std::string, double> dimension_variability(const DiffTable& diffs) {
  std::map<std::string, std::vector<double>> per_dim;
  for (const auto& [model, dims] : diffs)
    for (const auto& [dim, value] : dims) per_dim[dim].push_back(value);
  std::map<std::string, double> out;
  for (const auto& [dim, values] : per_dim) {
    if (values.size() < 2)
      throw ValidationError("variability for dimension '" + dim +
                            "' requires at least 2 models");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out[dim] = std::sqrt(ss / values.size());
  }
  return out;
}

// Pearson correlation between model size and a dimension's relative
// difference, after dropping the configured exclusions.
inline CorrelationResult size_sensitivity(const std::vector<ModelResult>& models,
                                          const DiffTable& diffs,
                                          const std::string& dimension,
                                          const std::set<std::string>& exclusions,
                                          bool log_scale = false) {
  std::vector<double> sizes, values;
  for (const auto& m : models) {
    if (exclusions.count(m.model_id)) continue;
    auto dt = diffs.find(m.model_id);
    if (dt == diffs.end()) continue;
    auto vt = dt->second.find(dimension);
    if (vt == dt->second.end()) continue;
    if (!m.param_count_billions)
      throw ValidationError("model '" + m.model_id +
                            "' has no parameter-count metadata");
    sizes.push_back(log_scale ? std::log(*m.param_count_billions)
                              : *m.param_count_billions);
    values.push_back(vt->second);
  }
  if (sizes.size() < 3)
    throw ValidationError("size correlation for '" + dimension +
                          "' requires at least 3 included models with known size");
  return correlation(sizes, values, CorrelationMethod::pearson);
}

// ---------------------------------------------------------------------------
// Model-size metadata

// Pulls the parameter count out of ids like "qwen2.5-72b" or "llama3.1-8B";
// when several size-like tokens appear the last one wins. Returns nothing for
// ids without one (e.g. "gpt4o").
inline std::optional<double> parse_param_billions(const std::string& model_id) {
  static const std::regex kSize("([0-9]+(?:\\.[0-9]+)?)[bB](?![A-Za-z0-9])");
  std::optional<double> result;
  for (auto it = std::sregex_iterator(model_id.begin(), model_id.end(), kSize);
       it != std::sregex_iterator(); ++it)
    result = std::stod((*it)[1].str());
  return result;
}

// ---------------------------------------------------------------------------
// Cohort construction from run records

// Mean of each dimension for one model over the records passing the filter:
// runs average within a scenario first, scenarios average with equal weight.
inline std::vector<ModelResult> cohort_model_results(
    const std::vector<RunRecord>& records,
    const std::function<bool(const PatientProfile&)>& in_cohort,
    const std::map<std::string, double>& size_overrides = {}) {
  // model -> dimension -> scenario -> values
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>>
      acc;
  for (const auto& r : records) {
    if (!in_cohort(r.profile)) continue;
    for (const auto& [id, score] : r.rubric_scores)
      acc[r.doctor_model][dimension_for_rubric(id)][r.scenario_id].push_back(
          score.aggregate);
  }
  std::vector<ModelResult> out;
  for (const auto& [model, dims] : acc) {
    ModelResult result;
    result.model_id = model;
    auto ov = size_overrides.find(model);
    result.param_count_billions =
        ov != size_overrides.end() ? std::optional<double>(ov->second)
                                   : parse_param_billions(model);
    for (const auto& [dim, scenarios] : dims) {
      double scenario_sum = 0.0;
      for (const auto& [scenario, values] : scenarios) {
        double run_sum = 0.0;
        for (double v : values) run_sum += v;
        scenario_sum += run_sum / values.size();
      }
      result.dimension_scores[dim] = scenario_sum / scenarios.size();
    }
    out.push_back(std::move(result));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contrasts

enum class ContrastKind { hl, edu, emotion };

inline const char* to_string(ContrastKind c) {
  switch (c) {
    case ContrastKind::hl: return "hl";
    case ContrastKind::edu: return "edu";
    case ContrastKind::emotion: return "emotion";
  }
  throw ValidationError("bad ContrastKind");
}
inline ContrastKind contrast_from_string(std::string_view s) {
  if (s == "hl") return ContrastKind::hl;
  if (s == "edu") return ContrastKind::edu;
  if (s == "emotion") return ContrastKind::emotion;
  throw ConfigError("unknown contrast: " + std::string(s) +
                    " (expected hl, edu, or emotion)");
}

struct CohortContrast {
  std::string name;      // e.g. "HL2_vs_HL1" (reads: (target - baseline)/baseline)
  std::string baseline;  // cohort label
  std::string target;
  std::function<bool(const PatientProfile&)> baseline_filter;
  std::function<bool(const PatientProfile&)> target_filter;
};

inline std::vector<CohortContrast> contrasts_for(ContrastKind kind) {
  auto hl_is = [](HealthLiteracy h) {
    return [h](const PatientProfile& p) { return p.health_literacy == h; };
  };
  auto edu_is = [](EducationLevel e) {
    return [e](const PatientProfile& p) { return p.education == e; };
  };
  auto emo_is = [](EmotionStyle e) {
    return [e](const PatientProfile& p) { return p.emotion == e; };
  };
  switch (kind) {
    case ContrastKind::hl:
      return {{"HL2_vs_HL1", "HL1 (low literacy)", "HL2 (high literacy)",
               hl_is(HealthLiteracy::low), hl_is(HealthLiteracy::high)}};
    case ContrastKind::edu:
      return {{"Edu2_vs_Edu1", "Edu1 (no high school)", "Edu2 (high school)",
               edu_is(EducationLevel::edu1_no_hs), edu_is(EducationLevel::edu2_hs_ged)},
              {"Edu3_vs_Edu1", "Edu1 (no high school)", "Edu3 (college)",
               edu_is(EducationLevel::edu1_no_hs), edu_is(EducationLevel::edu3_college)},
              {"Edu3_vs_Edu2", "Edu2 (high school)", "Edu3 (college)",
               edu_is(EducationLevel::edu2_hs_ged), edu_is(EducationLevel::edu3_college)}};
    case ContrastKind::emotion:
      return {{"anxious_vs_deflective", "deflective", "anxious",
               emo_is(EmotionStyle::deflective), emo_is(EmotionStyle::anxious)},
              {"neutral_vs_deflective", "deflective", "neutral",
               emo_is(EmotionStyle::deflective), emo_is(EmotionStyle::neutral)},
              {"anxious_vs_neutral", "neutral", "anxious",
               emo_is(EmotionStyle::neutral), emo_is(EmotionStyle::anxious)}};
  }
  throw ValidationError("bad ContrastKind");
}

// Models excluded from size correlations unless overridden; mirrors the
// outlier policy the analyses were designed around.
inline const std::set<std::string>& default_size_exclusions() {
  static const std::set<std::string> kExclusions = {"qwen2.5-0.5b"};
  return kExclusions;
}

// ---------------------------------------------------------------------------
// Full report

struct PairwiseSensitivity {
  std::string name;
  std::string baseline;
  std::string target;
  DiffTable diffs;
  std::map<std::string, double> variability;
  std::map<std::string, CorrelationResult> size_correlations;
  std::map<std::string, std::string> size_correlation_errors;
};

struct SensitivityReport {
  std::string contrast;
  std::vector<PairwiseSensitivity> pairs;
  std::vector<std::string> exclusions;
  std::vector<std::string> notes;
};

inline SensitivityReport build_sensitivity_report(
    const std::vector<RunRecord>& records, ContrastKind kind,
    const std::set<std::string>& exclusions = default_size_exclusions(),
    const std::map<std::string, double>& size_overrides = {},
    bool log_scale = false) {
  SensitivityReport report;
  report.contrast = to_string(kind);
  report.exclusions.assign(exclusions.begin(), exclusions.end());
  report.notes = {
      "relative difference = (target - baseline) / baseline, per model and dimension",
      "cohort means average runs within each scenario first, then across scenarios",
      "variability is the population standard deviation (divisor n) across models",
      log_scale ? "size correlations use log parameter count"
                : "size correlations use raw parameter count in billions"};

  for (const auto& contrast : contrasts_for(kind)) {
    auto baseline = cohort_model_results(records, contrast.baseline_filter,
                                         size_overrides);
    auto target = cohort_model_results(records, contrast.target_filter,
                                       size_overrides);

    // Pre-align the cohorts: a model or dimension must appear on both sides
    // of the contrast to be comparable.
    std::map<std::string, ModelResult> by_id_b;
    for (auto& m : target) by_id_b[m.model_id] = m;
    std::vector<ModelResult> a_aligned, b_aligned;
    for (auto& a : baseline) {
      auto it = by_id_b.find(a.model_id);
      if (it == by_id_b.end()) {
        report.notes.push_back("model '" + a.model_id + "' dropped from " +
                               contrast.name + ": no runs in target cohort");
        continue;
      }
      ModelResult a2 = a, b2 = it->second;
      std::map<std::string, double> common_a, common_b;
      for (const auto& [dim, v] : a2.dimension_scores) {
        auto bt = b2.dimension_scores.find(dim);
        if (bt != b2.dimension_scores.end()) {
          common_a[dim] = v;
          common_b[dim] = bt->second;
        }
      }
      a2.dimension_scores = std::move(common_a);
      b2.dimension_scores = std::move(common_b);
      if (a2.dimension_scores.empty()) continue;
      a_aligned.push_back(std::move(a2));
      b_aligned.push_back(std::move(b2));
    }
    if (a_aligned.empty()) {
      report.notes.push_back("contrast " + contrast.name +
                             " skipped: no comparable models");
      continue;
    }

    PairwiseSensitivity pair;
    pair.name = contrast.name;
    pair.baseline = contrast.baseline;
    pair.target = contrast.target;
    pair.diffs = relative_difference(a_aligned, b_aligned);
    try {
      pair.variability = dimension_variability(pair.diffs);
    } catch (const ValidationError& e) {
      report.notes.push_back(std::string("variability unavailable for ") +
                             contrast.name + ": " + e.what());
    }
    std::set<std::string> dims;
    for (const auto& [model, d] : pair.diffs)
      for (const auto& [dim, v] : d) dims.insert(dim);
    for (const auto& dim : dims) {
      try {
        pair.size_correlations[dim] =
            size_sensitivity(a_aligned, pair.diffs, dim, exclusions, log_scale);
      } catch (const ValidationError& e) {
        pair.size_correlation_errors[dim] = e.what();
      } catch (const DegenerateInputError& e) {
        pair.size_correlation_errors[dim] = e.what();
      }
    }
    report.pairs.push_back(std::move(pair));
  }
  return report;
}

inline nlohmann::json to_json(const SensitivityReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pair : report.pairs) {
    nlohmann::json diffs = nlohmann::json::object();
    for (const auto& [model, dims] : pair.diffs) {
      nlohmann::json row = nlohmann::json::object();
      for (const auto& [dim, v] : dims) row[dim] = v;
      diffs[model] = row;
    }
    nlohmann::json corr = nlohmann::json::object();
    for (const auto& [dim, c] : pair.size_correlations)
      corr[dim] = {{"r", c.r}, {"p_value", c.p_value}, {"n", c.n}};
    for (const auto& [dim, err] : pair.size_correlation_errors)
      corr[dim] = {{"error", err}};
    pairs.push_back({{"name", pair.name},
                     {"baseline", pair.baseline},
                     {"target", pair.target},
                     {"relative_differences", diffs},
                     {"variability", pair.variability},
                     {"size_correlations", corr}});
  }
  return {{"contrast", report.contrast},
          {"pairs", pairs},
          {"exclusions", report.exclusions},
          {"notes", report.notes}};
}

}  // namespace dsim
