#include <doctest.h>

#include <cmath>

#include "dsim/metrics.hpp"

using namespace dsim;

namespace {

Lexicon demo_lexicon() {
  Lexicon lex;
  lex.add("C_PNA", "pneumonia");
  lex.add("C_DM2", "type 2 diabetes mellitus");
  lex.add("C_DM2", "diabetes");
  lex.add("C_APAP", "acetaminophen");
  lex.add("C_APAP", "tylenol");
  lex.add("C_K", "potassium");
  lex.add("C_KCL", "potassium chloride");
  return lex;
}

}  // namespace

TEST_CASE("lcs length on token sequences") {
  CHECK(lcs_length({"a", "b", "c", "d"}, {"a", "c", "e"}) == 2);
  CHECK(lcs_length({"a", "b"}, {"c", "d"}) == 0);
  CHECK(lcs_length({}, {"a"}) == 0);
  CHECK(lcs_length({"x", "y", "z"}, {"x", "y", "z"}) == 3);
}

TEST_CASE("rouge-l precision, recall, and f1") {
  PRF prf = rouge_l(std::vector<std::string>{"a", "b", "c", "d"},
                    std::vector<std::string>{"a", "c", "e"});
  CHECK(prf.precision == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(prf.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(prf.f1 == doctest::Approx(4.0 / 7.0).epsilon(1e-12));

  // The string overload tokenizes (lowercase, punctuation-splitting) first.
  PRF same = rouge_l("A b, c D!", "a c e");
  CHECK(same.f1 == doctest::Approx(prf.f1));

  CHECK(rouge_l("", "anything") == PRF{});
  CHECK(rouge_l("anything", "") == PRF{});
}

TEST_CASE("rouge-l of identical texts is 1.0 everywhere") {
  PRF prf = rouge_l("take two tablets daily", "take two tablets daily");
  CHECK(prf.precision == 1.0);
  CHECK(prf.recall == 1.0);
  CHECK(prf.f1 == 1.0);
}

TEST_CASE("lexicon parses tab-separated lines and rejects malformed ones") {
  Lexicon lex = Lexicon::parse(
      "# comment\n"
      "C_PNA\tpneumonia\n"
      "\n"
      "C_APAP\ttylenol\n");
  CHECK(lex.size() == 2);

  CHECK_THROWS_WITH_AS(Lexicon::parse("C_PNA pneumonia"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(Lexicon::parse("ok\tfine\nbroken line\n"),
                       doctest::Contains("canonical_id<TAB>surface_form"),
                       ParseError);
  // The same surface may not map to two ids.
  CHECK_THROWS_AS(Lexicon::parse("C_A\tword\nC_B\tword\n"), ParseError);
}

TEST_CASE("concept extraction prefers the longest surface at each position") {
  Lexicon lex = demo_lexicon();
  ConceptSet c = extract_concepts("history of type 2 diabetes mellitus", lex);
  CHECK(c == ConceptSet{"C_DM2"});

  // "potassium chloride" must not double-count as bare "potassium".
  CHECK(extract_concepts("take potassium chloride", lex) == ConceptSet{"C_KCL"});
  CHECK(extract_concepts("low potassium level", lex) == ConceptSet{"C_K"});

  // Synonyms canonicalize to one id.
  CHECK(extract_concepts("tylenol", lex) == extract_concepts("acetaminophen", lex));
}

TEST_CASE("concept precision/recall/f1 against a reference text") {
  Lexicon lex = demo_lexicon();
  ConceptPrf got = concept_prf("pneumonia treated, continue tylenol",
                               "pneumonia with diabetes, acetaminophen as needed",
                               lex);
  // gen = {C_PNA, C_APAP}; ref = {C_PNA, C_DM2, C_APAP}; inter = 2.
  CHECK(got.prf.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(got.prf.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(got.prf.f1 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(got.degenerate_gen);
  CHECK_FALSE(got.degenerate_ref);
}

TEST_CASE("concept scoring flags degenerate sides instead of dividing by zero") {
  Lexicon lex = demo_lexicon();
  ConceptPrf no_gen = concept_prf("nothing matches here", "pneumonia", lex);
  CHECK(no_gen.degenerate_gen);
  CHECK(no_gen.prf == PRF{});
  ConceptPrf no_ref = concept_prf("pneumonia", "nothing matches here", lex);
  CHECK(no_ref.degenerate_ref);
  CHECK(no_ref.prf.recall == 0.0);
}

TEST_CASE("checklist accuracy is 1.0 on identical docs and 0.0 on empty output") {
  Lexicon lex = demo_lexicon();
  ChecklistDoc gold = empty_checklist();
  gold[StageId::diagnosis] = {"pneumonia confirmed by x-ray"};
  gold[StageId::medications] = {"acetaminophen 650 mg as needed",
                                "potassium chloride 20 meq daily"};

  CHECK(checklist_accuracy(gold, gold, lex) == 1.0);
  CHECK(checklist_accuracy(empty_checklist(), gold, lex) == 0.0);
  CHECK_THROWS_WITH_AS(checklist_accuracy(gold, empty_checklist(), lex),
                       doctest::Contains("gold checklist is empty"),
                       DegenerateInputError);
}

TEST_CASE("checklist accuracy hand case: three of four gold items matched") {
  Lexicon lex = demo_lexicon();
  ChecklistDoc gold = empty_checklist();
  gold[StageId::diagnosis] = {"pneumonia"};
  gold[StageId::medications] = {"acetaminophen 650 mg as needed",
                                "potassium chloride 20 meq daily"};
  gold[StageId::follow_up] = {"see your primary care doctor in one week"};

  ChecklistDoc generated = empty_checklist();
  // Paraphrase via synonym; signature {c:C_PNA} matches exactly.
  generated[StageId::diagnosis] = {"pneumonia"};
  // Token overlap 4/5 = 0.8 and 5/5 after canonicalization-unaffected tokens;
  // both clear the 0.5 bar.
  generated[StageId::medications] = {"tylenol 650 mg as needed",
                                     "potassium chloride 20 meq daily"};
  // Same words but filed in the wrong section: must NOT match.
  generated[StageId::return_indicators] = {
      "see your primary care doctor in one week"};

  CHECK(checklist_accuracy(generated, gold, lex) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("a generated item can satisfy at most one gold item") {
  Lexicon lex = demo_lexicon();
  ChecklistDoc gold = empty_checklist();
  gold[StageId::medications] = {"acetaminophen in the morning",
                                "acetaminophen in the evening"};
  ChecklistDoc generated = empty_checklist();
  generated[StageId::medications] = {"acetaminophen in the morning"};
  CHECK(checklist_accuracy(generated, gold, lex) == doctest::Approx(0.5));
}

TEST_CASE("item signatures mix concept ids and leftover tokens") {
  Lexicon lex = demo_lexicon();
  auto sig = checklist_item_signature("take Tylenol daily", lex);
  CHECK(sig == std::set<std::string>{"c:C_APAP", "t:take", "t:daily"});
  CHECK(jaccard(sig, checklist_item_signature("take acetaminophen daily", lex)) ==
        1.0);
  CHECK(jaccard({}, {}) == 0.0);
}

TEST_CASE("average ranks split ties evenly") {
  CHECK(average_ranks({10.0, 20.0, 30.0}) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(average_ranks({5.0, 1.0, 5.0}) == std::vector<double>{2.5, 1.0, 2.5});
  CHECK(average_ranks({7.0, 7.0, 7.0, 7.0}) ==
        std::vector<double>{2.5, 2.5, 2.5, 2.5});
}

TEST_CASE("agreement: hand-built chance-level raters give kappa 0") {
  AgreementStats stats = agreement_stats({1, 1, 0, 0}, {1, 0, 0, 1});
  CHECK(stats.kappa == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stats.percent_agreement == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(stats.n == 4);
}

TEST_CASE("agreement: identical non-constant raters give kappa 1") {
  AgreementStats stats = agreement_stats({0, 1, 2, 1}, {0, 1, 2, 1});
  CHECK(stats.kappa == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.percent_agreement == 1.0);
  CHECK(stats.spearman_rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("agreement: 49-pair set with 42 matches lands on 0.857142...") {
  std::vector<int> a(49, 0), b(49, 0);
  for (std::size_t i = 0; i < 25; ++i) a[i] = 1;
  b = a;
  for (std::size_t i = 0; i < 7; ++i) b[i] = 0;  // seven disagreements
  AgreementStats stats = agreement_stats(a, b);
  CHECK(stats.percent_agreement == doctest::Approx(42.0 / 49.0).epsilon(1e-12));
  CHECK(stats.percent_agreement == doctest::Approx(0.8571428571428571).epsilon(1e-12));
}

TEST_CASE("agreement rejects bad input shapes") {
  CHECK_THROWS_AS(agreement_stats({1, 0}, {1}), ValidationError);
  CHECK_THROWS_AS(agreement_stats({1}, {1}), ValidationError);
  // Both raters constant on the same label: expected agreement is 1.
  CHECK_THROWS_AS(agreement_stats({2, 2, 2}, {2, 2, 2}), DegenerateInputError);
}

TEST_CASE("pearson correlation with significance") {
  CorrelationResult perfect =
      correlation({1, 2, 3, 4}, {2, 4, 6, 8}, CorrelationMethod::pearson);
  CHECK(perfect.r == doctest::Approx(1.0));
  CHECK(perfect.p_value == 0.0);

  CorrelationResult anti =
      correlation({1, 2, 3, 4}, {8, 6, 4, 2}, CorrelationMethod::pearson);
  CHECK(anti.r == doctest::Approx(-1.0));
  CHECK(anti.p_value == 0.0);

  // r = 0 by symmetry: p must be 1.
  CorrelationResult flat =
      correlation({-2, -1, 0, 1, 2}, {4, 1, 0, 1, 4}, CorrelationMethod::pearson);
  CHECK(flat.r == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(flat.p_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spearman correlation is rank-based") {
  // Monotone but nonlinear: spearman 1, pearson < 1.
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y{1, 8, 27, 64, 125};
  CHECK(correlation(x, y, CorrelationMethod::spearman).r == doctest::Approx(1.0));
  CHECK(correlation(x, y, CorrelationMethod::pearson).r < 1.0);
}

TEST_CASE("t-distribution p-values match reference values") {
  // Student t with 8 degrees of freedom: P(|T| > 2.306) = 0.05 (the classic
  // two-sided 5% critical value).
  CHECK(t_two_sided_p(2.306, 8.0) == doctest::Approx(0.05).epsilon(1e-3));
  // nu=1 is the Cauchy distribution: P(|T| > 1) = 0.5 exactly.
  CHECK(t_two_sided_p(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(t_two_sided_p(0.0, 5.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlation input validation") {
  CHECK_THROWS_AS(correlation({1, 2}, {1, 2, 3}, CorrelationMethod::pearson),
                  ValidationError);
  CHECK_THROWS_AS(correlation({1, 2}, {3, 4}, CorrelationMethod::pearson),
                  ValidationError);
  CHECK_THROWS_WITH_AS(
      correlation({1, 1, 1}, {1, 2, 3}, CorrelationMethod::pearson),
      doctest::Contains("zero variance"), DegenerateInputError);
  std::vector<double> with_nan{1, 2, std::nan("")};
  CHECK_THROWS_AS(correlation(with_nan, {1, 2, 3}, CorrelationMethod::pearson),
                  ValidationError);
}

TEST_CASE("exact permutation p-value for small n") {
  // Perfectly monotone n=4: only the identity and the full reversal reach
  // |r| = 1, so p = 2/24.
  double p = correlation_permutation_p({1, 2, 3, 4}, {10, 20, 30, 40},
                                       CorrelationMethod::spearman);
  CHECK(p == doctest::Approx(2.0 / 24.0).epsilon(1e-12));

  std::vector<double> big(11, 0.0);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i);
  CHECK_THROWS_AS(
      correlation_permutation_p(big, big, CorrelationMethod::pearson),
      ConfigError);
}
