#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dsim/artifacts.hpp"
#include "dsim/error.hpp"
#include "dsim/util.hpp"

namespace dsim {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const PRF&) const = default;
};

inline double harmonic_f1(double precision, double recall) {
  double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

// ---------------------------------------------------------------------------
// ROUGE-L

// LCS length via the standard two-row DP.
inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                     : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

inline PRF rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return {};
  double lcs = static_cast<double>(lcs_length(candidate, reference));
  PRF out;
  out.precision = lcs / static_cast<double>(candidate.size());
  out.recall = lcs / static_cast<double>(reference.size());
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

inline PRF rouge_l(const std::string& candidate, const std::string& reference) {
  return rouge_l(tokenize(candidate), tokenize(reference));
}

// ---------------------------------------------------------------------------
// Lexicon-based concept extraction

struct ConceptMatch {
  std::size_t token_start = 0;
  std::size_t token_count = 0;
  std::string concept_id;
};

// Surface-form -> canonical-id table with multi-token surfaces. File format:
// `canonical_id<TAB>surface_form`, one per line; blank lines and lines
// starting with '#' are skipped; repeated ids declare synonyms.
class Lexicon {
 public:
  void add(const std::string& canonical_id, const std::string& surface_form) {
    if (canonical_id.empty()) throw ParseError("lexicon entry with empty canonical id");
    std::vector<std::string> tokens = tokenize(surface_form);
    if (tokens.empty())
      throw ParseError("lexicon surface form for '" + canonical_id +
                       "' has no usable tokens");
    std::string key = join(tokens, " ");
    auto [it, inserted] = surfaces_.emplace(key, canonical_id);
    if (!inserted && it->second != canonical_id)
      throw ParseError("lexicon surface '" + key + "' maps to both '" + it->second +
                       "' and '" + canonical_id + "'");
    max_tokens_ = std::max(max_tokens_, tokens.size());
  }

  static Lexicon parse(const std::string& text) {
    Lexicon lex;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      start = end + 1;
      ++line_no;
      std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": expected canonical_id<TAB>surface_form");
      lex.add(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
    }
    return lex;
  }

  static Lexicon load(const std::string& path) { return parse(read_file(path)); }

  std::size_t size() const { return surfaces_.size(); }

  // Greedy longest-match scan; a longer surface suppresses any shorter one
  // starting at the same position, and matched tokens are consumed.
  std::vector<ConceptMatch> match_spans(const std::vector<std::string>& tokens) const {
    std::vector<ConceptMatch> matches;
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t longest = std::min(max_tokens_, tokens.size() - i);
      bool found = false;
      for (std::size_t len = longest; len >= 1; --len) {
        std::string key = tokens[i];
        for (std::size_t k = 1; k < len; ++k) key += " " + tokens[i + k];
        auto it = surfaces_.find(key);
        if (it != surfaces_.end()) {
          matches.push_back({i, len, it->second});
          i += len;
          found = true;
          break;
        }
      }
      if (!found) ++i;
    }
    return matches;
  }

 private:
  std::map<std::string, std::string> surfaces_;
  std::size_t max_tokens_ = 1;
};

using ConceptSet = std::set<std::string>;

inline ConceptSet extract_concepts(const std::string& text, const Lexicon& lexicon) {
  ConceptSet out;
  for (const auto& m : lexicon.match_spans(tokenize(text))) out.insert(m.concept_id);
  return out;
}

struct ConceptPrf {
  PRF prf;
  bool degenerate_ref = false;  // reference yielded no concepts
  bool degenerate_gen = false;  // generated text yielded no concepts
};

// Precision = |C_ref n C_gen| / |C_gen|, Recall = |C_ref n C_gen| / |C_ref|,
// F1 = harmonic mean. Empty sets give 0 with the degenerate flag set rather
// than NaN, keeping report columns stable.
inline ConceptPrf concept_prf(const std::string& generated_text,
                              const std::string& reference_text,
                              const Lexicon& lexicon) {
  ConceptSet gen = extract_concepts(generated_text, lexicon);
  ConceptSet ref = extract_concepts(reference_text, lexicon);
  ConceptPrf out;
  out.degenerate_gen = gen.empty();
  out.degenerate_ref = ref.empty();
  std::size_t inter = 0;
  for (const auto& c : ref) inter += gen.count(c);
  if (!gen.empty()) out.prf.precision = static_cast<double>(inter) / gen.size();
  if (!ref.empty()) out.prf.recall = static_cast<double>(inter) / ref.size();
  out.prf.f1 = harmonic_f1(out.prf.precision, out.prf.recall);
  return out;
}

// ---------------------------------------------------------------------------
// Checklist accuracy

// Item signature: canonical ids of matched concepts plus every token that no
// concept match consumed. Concepts and plain tokens are namespaced so an id
// can never collide with a word.
inline std::set<std::string> checklist_item_signature(const std::string& item,
                                                      const Lexicon& lexicon) {
  std::vector<std::string> tokens = tokenize(item);
  std::vector<bool> consumed(tokens.size(), false);
  std::set<std::string> signature;
  for (const auto& m : lexicon.match_spans(tokens)) {
    signature.insert("c:" + m.concept_id);
    for (std::size_t k = 0; k < m.token_count; ++k)
      consumed[m.token_start + k] = true;
  }
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!consumed[i]) signature.insert("t:" + tokens[i]);
  return signature;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) /
         static_cast<double>(a.size() + b.size() - inter);
}

// Fraction of gold items matched by a generated item of the same section with
// signature Jaccard >= threshold. Matching is greedy best-first (highest
// similarity first; ties broken by gold then generated position) and each
// generated item is consumable once.
inline double checklist_accuracy(const ChecklistDoc& generated,
                                 const ChecklistDoc& gold, const Lexicon& lexicon,
                                 double threshold = 0.5) {
  std::size_t total_gold = 0, matched = 0;
  for (StageId stage : kAllStages) {
    auto gold_it = gold.find(stage);
    const std::vector<std::string> no_items;
    const auto& gold_items = gold_it == gold.end() ? no_items : gold_it->second;
    total_gold += gold_items.size();
    if (gold_items.empty()) continue;
    auto gen_it = generated.find(stage);
    const auto& gen_items = gen_it == generated.end() ? no_items : gen_it->second;
    if (gen_items.empty()) continue;

    std::vector<std::set<std::string>> gold_sigs, gen_sigs;
    for (const auto& item : gold_items)
      gold_sigs.push_back(checklist_item_signature(item, lexicon));
    for (const auto& item : gen_items)
      gen_sigs.push_back(checklist_item_signature(item, lexicon));

    struct Pair {
      double sim;
      std::size_t gi, ji;
    };
    std::vector<Pair> pairs;
    for (std::size_t gi = 0; gi < gold_sigs.size(); ++gi)
      for (std::size_t ji = 0; ji < gen_sigs.size(); ++ji) {
        double sim = jaccard(gold_sigs[gi], gen_sigs[ji]);
        if (sim >= threshold) pairs.push_back({sim, gi, ji});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.sim != b.sim) return a.sim > b.sim;
      if (a.gi != b.gi) return a.gi < b.gi;
      return a.ji < b.ji;
    });
    std::vector<bool> gold_used(gold_sigs.size(), false),
        gen_used(gen_sigs.size(), false);
    for (const auto& p : pairs) {
      if (gold_used[p.gi] || gen_used[p.ji]) continue;
      gold_used[p.gi] = gen_used[p.ji] = true;
      ++matched;
    }
  }
  if (total_gold == 0)
    throw DegenerateInputError("checklist accuracy undefined: gold checklist is empty");
  return static_cast<double>(matched) / static_cast<double>(total_gold);
}

// ---------------------------------------------------------------------------
// Rank helpers

// Average ranks (1-based), ties receiving the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateInputError("correlation undefined: zero variance");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Agreement statistics

struct AgreementStats {
  double kappa = 0.0;
  double percent_agreement = 0.0;
  double spearman_rho = 0.0;
  std::size_t n = 0;
};

inline AgreementStats agreement_stats(const std::vector<int>& labels_a,
                                      const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw ValidationError("agreement requires equal-length label lists");
  const std::size_t n = labels_a.size();
  if (n < 2) throw ValidationError("agreement requires at least 2 items");

  std::size_t matches = 0;
  std::map<int, std::size_t> count_a, count_b;
  for (std::size_t i = 0; i < n; ++i) {
    matches += labels_a[i] == labels_b[i];
    ++count_a[labels_a[i]];
    ++count_b[labels_b[i]];
  }
  double p_o = static_cast<double>(matches) / n;
  double p_e = 0.0;
  for (const auto& [label, ca] : count_a) {
    auto it = count_b.find(label);
    if (it != count_b.end())
      p_e += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
  }
  if (p_e >= 1.0)
    throw DegenerateInputError(
        "kappa undefined: expected agreement is 1 (both raters constant)");

  AgreementStats stats;
  stats.n = n;
  stats.percent_agreement = p_o;
  stats.kappa = (p_o - p_e) / (1.0 - p_e);

  std::vector<double> da(labels_a.begin(), labels_a.end());
  std::vector<double> db(labels_b.begin(), labels_b.end());
  stats.spearman_rho = pearson_r(average_ranks(da), average_ranks(db));
  return stats;
}

// ---------------------------------------------------------------------------
// Correlation with significance

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

enum class CorrelationMethod { pearson, spearman };

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta function
// (modified Lentz method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 200;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p for a t statistic with nu degrees of freedom:
// p = I_{nu/(nu+t^2)}(nu/2, 1/2).
inline double t_two_sided_p(double t, double nu) {
  double x = nu / (nu + t * t);
  return std::clamp(detail::incomplete_beta(nu / 2.0, 0.5, x), 0.0, 1.0);
}

inline CorrelationResult correlation(const std::vector<double>& x,
                                     const std::vector<double>& y,
                                     CorrelationMethod method) {
  if (x.size() != y.size())
    throw ValidationError("correlation requires equal-length inputs");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("correlation requires at least 3 points");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw ValidationError("correlation requires finite values");

  CorrelationResult result;
  result.n = n;
  if (method == CorrelationMethod::pearson) {
    result.r = pearson_r(x, y);
  } else {
    result.r = pearson_r(average_ranks(x), average_ranks(y));
  }
  double nu = static_cast<double>(n - 2);
  if (std::fabs(result.r) >= 1.0) {
    result.p_value = 0.0;
  } else {
    double t = result.r * std::sqrt(nu / (1.0 - result.r * result.r));
    result.p_value = t_two_sided_p(t, nu);
  }
  return result;
}

// Exact two-sided permutation p-value: the fraction of y-permutations whose
// |r| meets or exceeds the observed |r|. Factorial cost, so capped at n=10.
inline double correlation_permutation_p(const std::vector<double>& x,
                                        const std::vector<double>& y,
                                        CorrelationMethod method) {
  if (x.size() != y.size())
    throw ValidationError("correlation requires equal-length inputs");
  if (x.size() > 10)
    throw ConfigError("permutation p-value limited to n <= 10");
  CorrelationResult observed = correlation(x, y, method);
  const double target = std::fabs(observed.r) - 1e-12;

  std::vector<double> xs = x;
  if (method == CorrelationMethod::spearman) xs = average_ranks(x);
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t hits = 0, total = 0;
  std::vector<double> perm(y.size());
  do {
    for (std::size_t i = 0; i < idx.size(); ++i) perm[i] = y[idx[i]];
    std::vector<double> ys = perm;
    if (method == CorrelationMethod::spearman) ys = average_ranks(perm);
    double r;
    try {
      r = pearson_r(xs, ys);
    } catch (const DegenerateInputError&) {
      r = 0.0;  // constant permutation of tied values carries no signal
    }
    hits += std::fabs(r) >= target;
    ++total;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace dsim
