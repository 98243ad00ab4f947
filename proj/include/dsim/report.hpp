#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsim/analysis.hpp"
#include "dsim/run_record.hpp"
#include "dsim/rubrics.hpp"

namespace dsim {

// Checklist-accuracy construction note, printed with every rendered report so
// the number is never read as something it is not.
inline constexpr const char* kChecklistAccuracyNote =
    "AHRQ ACC: fraction of ground-truth checklist items (derived from the "
    "discharge record) matched by a generated checklist item in the same "
    "section. Items match when the Jaccard similarity of their "
    "concept/token signatures is at least 0.50; matching is greedy "
    "best-first and each generated item is used at most once.";

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline std::string cell2(const std::optional<double>& v) {
  return v ? fmt(*v, 2) : "—";
}
inline std::string cell4(const std::optional<double>& v) {
  return v ? fmt(*v, 4) : "—";
}
inline std::string cell_pct(const std::optional<double>& v) {
  return v ? fmt(*v * 100.0, 2) : "—";
}

template <typename Fn>
std::optional<double> mean_of(const std::vector<const RunRecord*>& runs, Fn get) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const RunRecord* r : runs) {
    std::optional<double> v = get(*r);
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline std::optional<double> rubric_aggregate(const RunRecord& r, RubricId id) {
  auto it = r.rubric_scores.find(id);
  if (it == r.rubric_scores.end()) return std::nullopt;
  return it->second.aggregate;
}

inline std::optional<double> rubric_criterion(const RunRecord& r, RubricId id,
                                              const std::string& criterion) {
  auto it = r.rubric_scores.find(id);
  if (it == r.rubric_scores.end()) return std::nullopt;
  const CriterionScore* c = it->second.find(criterion);
  if (!c) return std::nullopt;
  return c->score;
}

inline std::optional<double> exam_accuracy(const RunRecord& r, ExamCondition cond) {
  auto it = r.exams.find(cond);
  if (it == r.exams.end()) return std::nullopt;
  return it->second.accuracy;
}

inline std::map<std::string, std::vector<const RunRecord*>> by_model(
    const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<const RunRecord*>> out;
  for (const auto& r : records) out[r.doctor_model].push_back(&r);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tables. Cohort means are plain arithmetic means over each model's runs;
// rubric scores print to 2 decimals, accuracies as percentages to 2 decimals,
// generation metrics to 4 decimals, and missing values as an em dash.

inline Table build_conversation_table(const std::vector<RunRecord>& records,
                                      const RubricRegistry& rubrics) {
  using namespace detail;
  Table t;
  t.header = {"Model",       "Language Delivery", "Human Comm", "IRH",
              "MED",         "DX",                "PDT",        "TDS",
              "FU",          "Content avg",       "FR",         "GI",
              "PI",          "DM",                "EBC",        "RE",
              "Strategy avg", "Exam ACC",         "AHRQ ACC"};
  const auto& content = rubrics.get(RubricId::content_coverage).criteria;
  const auto& strategy = rubrics.get(RubricId::education_strategy).criteria;
  for (const auto& [model, runs] : by_model(records)) {
    std::vector<std::string> row;
    row.push_back(model);
    row.push_back(cell2(mean_of(runs, [](const RunRecord& r) {
      return rubric_aggregate(r, RubricId::language_delivery);
    })));
    row.push_back(cell2(mean_of(runs, [](const RunRecord& r) {
      return rubric_aggregate(r, RubricId::human_centered);
    })));
    for (const auto& criterion : content)
      row.push_back(cell2(mean_of(runs, [&](const RunRecord& r) {
        return rubric_criterion(r, RubricId::content_coverage, criterion);
      })));
    row.push_back(cell2(mean_of(runs, [](const RunRecord& r) {
      return rubric_aggregate(r, RubricId::content_coverage);
    })));
    for (const auto& criterion : strategy)
      row.push_back(cell2(mean_of(runs, [&](const RunRecord& r) {
        return rubric_criterion(r, RubricId::education_strategy, criterion);
      })));
    row.push_back(cell2(mean_of(runs, [](const RunRecord& r) {
      return rubric_aggregate(r, RubricId::education_strategy);
    })));
    row.push_back(cell_pct(mean_of(runs, [](const RunRecord& r) {
      return exam_accuracy(r, ExamCondition::dialogue_only);
    })));
    row.push_back(cell_pct(mean_of(runs, [](const RunRecord& r) {
      return r.checklist_acc;
    })));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table build_summary_table(const std::vector<RunRecord>& records,
                                 const RubricRegistry& rubrics) {
  using namespace detail;
  Table t;
  t.header = {"Model", "RougeL",  "BLEURT", "UMLS-F", "FL",
              "CO",    "INF",     "PER",    "L&A avg", "SC",
              "FAC",   "REL",     "CON",    "F&C avg", "Exam ACC"};
  const auto& group_a = rubrics.get(RubricId::summary_group_a).criteria;
  const auto& group_b = rubrics.get(RubricId::summary_group_b).criteria;
  for (const auto& [model, runs] : by_model(records)) {
    std::vector<std::string> row;
    row.push_back(model);
    row.push_back(cell4(mean_of(runs, [](const RunRecord& r) {
      return r.rouge ? std::optional<double>(r.rouge->f1) : std::nullopt;
    })));
    row.push_back(cell4(mean_of(runs, [](const RunRecord& r) {
      return r.external_score;
    })));
    row.push_back(cell4(mean_of(runs, [](const RunRecord& r) {
      return r.concepts ? std::optional<double>(r.concepts->prf.f1)
                        : std::nullopt;
    })));
    for (const auto& criterion : group_a)
      row.push_back(cell2(mean_of(runs, [&](const RunRecord& r) {
        return rubric_criterion(r, RubricId::summary_group_a, criterion);
      })));
    row.push_back(cell2(mean_of(runs, [](const RunRecord& r) {
      return rubric_aggregate(r, RubricId::summary_group_a);
    })));
    for (const auto& criterion : group_b)
      row.push_back(cell2(mean_of(runs, [&](const RunRecord& r) {
        return rubric_criterion(r, RubricId::summary_group_b, criterion);
      })));
    row.push_back(cell2(mean_of(runs, [](const RunRecord& r) {
      return rubric_aggregate(r, RubricId::summary_group_b);
    })));
    row.push_back(cell_pct(mean_of(runs, [](const RunRecord& r) {
      return exam_accuracy(r, ExamCondition::summary_only);
    })));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string to_csv(const Table& t) {
  auto escape = [](const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
    return out;
  };
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += escape(row[i]);
    }
    out += '\n';
  };
  emit(t.header);
  for (const auto& row : t.rows) emit(row);
  return out;
}

namespace detail {

// Column width in code points, not bytes, so the em dash doesn't skew grids.
inline std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

}  // namespace detail

inline std::string to_grid(const Table& t) {
  std::vector<std::size_t> widths(t.header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], detail::display_width(row[i]));
  };
  widen(t.header);
  for (const auto& row : t.rows) widen(row);

  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += "  ";
      const std::size_t pad = widths[i] - detail::display_width(row[i]);
      if (i == 0) {  // model column left-aligned, numbers right-aligned
        out += row[i];
        out.append(pad, ' ');
      } else {
        out.append(pad, ' ');
        out += row[i];
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  };
  emit(t.header);
  for (const auto& row : t.rows) emit(row);
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity rendering

inline std::string render_sensitivity_text(const SensitivityReport& report) {
  std::string out = "Profile sensitivity, contrast: " + report.contrast + "\n";
  for (const auto& pair : report.pairs) {
    out += "\n== " + pair.name + "  [baseline: " + pair.baseline +
           ", target: " + pair.target + "]\n";
    std::vector<std::string> dims;
    for (const auto& [model, row] : pair.diffs)
      for (const auto& [dim, v] : row)
        if (std::find(dims.begin(), dims.end(), dim) == dims.end())
          dims.push_back(dim);
    std::sort(dims.begin(), dims.end());

    Table t;
    t.header.push_back("Model");
    for (const auto& d : dims) t.header.push_back(d);
    for (const auto& [model, row] : pair.diffs) {
      std::vector<std::string> cells{model};
      for (const auto& d : dims) {
        auto it = row.find(d);
        cells.push_back(it == row.end() ? "—" : detail::fmt(it->second, 4));
      }
      t.rows.push_back(std::move(cells));
    }
    if (!pair.variability.empty()) {
      std::vector<std::string> cells{"(variability, population SD)"};
      for (const auto& d : dims) {
        auto it = pair.variability.find(d);
        cells.push_back(it == pair.variability.end() ? "—"
                                                     : detail::fmt(it->second, 4));
      }
      t.rows.push_back(std::move(cells));
    }
    out += to_grid(t);

    for (const auto& d : dims) {
      auto ct = pair.size_correlations.find(d);
      if (ct != pair.size_correlations.end()) {
        out += "size correlation [" + d + "]: r=" + detail::fmt(ct->second.r, 4) +
               ", p=" + detail::fmt(ct->second.p_value, 4) +
               ", n=" + std::to_string(ct->second.n) + "\n";
        continue;
      }
      auto et = pair.size_correlation_errors.find(d);
      if (et != pair.size_correlation_errors.end())
        out += "size correlation [" + d + "]: unavailable (" + et->second + ")\n";
    }
  }
  if (!report.exclusions.empty()) {
    out += "\nexcluded from size correlations:";
    for (const auto& e : report.exclusions) out += " " + e;
    out += "\n";
  }
  out += "\nnotes:\n";
  for (const auto& n : report.notes) out += "- " + n + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Report bundle

struct ReportPaths {
  std::string conversation_csv;
  std::string conversation_txt;
  std::string summary_csv;
  std::string summary_txt;
  std::vector<std::string> sensitivity_json;
};

inline ReportPaths write_reports(const std::vector<RunRecord>& records,
                                 const RubricRegistry& rubrics,
                                 const std::string& out_dir) {
  if (records.empty()) throw ValidationError("no run records to report on");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  const Table conversation = build_conversation_table(records, rubrics);
  const Table summary = build_summary_table(records, rubrics);

  ReportPaths paths;
  paths.conversation_csv = (dir / "conversation.csv").string();
  paths.conversation_txt = (dir / "conversation.txt").string();
  paths.summary_csv = (dir / "summary.csv").string();
  paths.summary_txt = (dir / "summary.txt").string();

  write_file(paths.conversation_csv, to_csv(conversation));
  write_file(paths.conversation_txt,
             "Conversation evaluation (cohort means over runs)\n\n" +
                 to_grid(conversation) + "\n" + kChecklistAccuracyNote + "\n");
  write_file(paths.summary_csv, to_csv(summary));
  write_file(paths.summary_txt,
             "Summary evaluation (cohort means over runs)\n\n" +
                 to_grid(summary) + "\n" + kChecklistAccuracyNote + "\n");

  for (ContrastKind kind :
       {ContrastKind::hl, ContrastKind::edu, ContrastKind::emotion}) {
    SensitivityReport report = build_sensitivity_report(records, kind);
    const std::string path =
        (dir / (std::string("sensitivity_") + to_string(kind) + ".json")).string();
    write_file(path, to_json(report).dump(2) + "\n");
    paths.sensitivity_json.push_back(path);
  }
  return paths;
}

}  // namespace dsim
