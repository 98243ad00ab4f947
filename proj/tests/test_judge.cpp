#include <doctest.h>

#include "dsim/judge.hpp"

using namespace dsim;

namespace {

const RubricRegistry& registry() {
  static const RubricRegistry kReg = RubricRegistry::with_defaults();
  return kReg;
}

JudgeInputs conversation_inputs() {
  return {{"transcript", "Doctor: hello.\nPatient: hi."},
          {"gold_record", "Chief complaint: cough"}};
}

std::string ld_fixture(double a, double b, double c, double reported) {
  nlohmann::json j = {
      {"Linguistic Clarity", {{"score", a}, {"justification", "ja"}}},
      {"Coherence", {{"score", b}, {"justification", "jb"}}},
      {"Repetitiveness", {{"score", c}, {"justification", "jc"}}},
      {"Language & Delivery score", reported}};
  return j.dump();
}

}  // namespace

TEST_CASE("judge prompts split into system and user sections with slots filled") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  auto messages = build_judge_prompt(ld, conversation_inputs());
  REQUIRE(messages.size() == 2);
  CHECK(messages[0].role == "system");
  CHECK(messages[1].role == "user");
  CHECK(messages[1].content.find("Doctor: hello.") != std::string::npos);
  CHECK(messages[1].content.find("Ground Truth Discharge Note") != std::string::npos);
  CHECK(messages[1].content.find("Chief complaint: cough") != std::string::npos);
  // No unfilled slot survives rendering.
  CHECK(messages[0].content.find("{{") == std::string::npos);
  CHECK(messages[1].content.find("{{") == std::string::npos);
}

TEST_CASE("missing required judge input is a configuration error naming the slot") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  CHECK_THROWS_WITH_AS(build_judge_prompt(ld, {{"transcript", "t"}}),
                       doctest::Contains("gold_record"), ConfigError);
}

TEST_CASE("each rubric declares the inputs its template needs") {
  auto needs = [&](RubricId id) {
    return registry().get(id).required_inputs();
  };
  CHECK(needs(RubricId::language_delivery) ==
        std::vector<std::string>{"transcript", "gold_record"});
  CHECK(needs(RubricId::summary_group_a) == std::vector<std::string>{"summary"});
  auto b = needs(RubricId::summary_group_b);
  CHECK(std::find(b.begin(), b.end(), "reference_summary") != b.end());
  CHECK(std::find(b.begin(), b.end(), "transcript") != b.end());
}

TEST_CASE("parsing recomputes the aggregate from criterion scores") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  RubricScore score = parse_rubric_response(ld_fixture(4.0, 3.5, 3.0, 3.5), ld);
  CHECK(score.aggregate == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(score.per_criterion.size() == 3);
  CHECK(score.warnings.empty());
  CHECK(score.find("Coherence")->score == 3.5);
}

TEST_CASE("a drifting judge-reported aggregate only warns") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  RubricScore score = parse_rubric_response(ld_fixture(4.0, 3.5, 3.0, 4.9), ld);
  CHECK(score.aggregate == doctest::Approx(3.5));  // local value wins
  REQUIRE(score.warnings.size() == 1);
  CHECK(score.warnings[0].find("differs") != std::string::npos);
}

TEST_CASE("judge output wrapped in prose still parses") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  std::string wrapped = "Here are my scores:\n```json\n" +
                        ld_fixture(2.0, 2.0, 2.0, 2.0) + "\n```\nDone.";
  CHECK(parse_rubric_response(wrapped, ld).aggregate == doctest::Approx(2.0));
}

TEST_CASE("out-of-bounds scores are rejected with the offending value") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  CHECK_THROWS_WITH_AS(parse_rubric_response(ld_fixture(5.7, 3.0, 3.0, 3.9), ld),
                       doctest::Contains("out of bounds"), ParseError);
  CHECK_THROWS_WITH_AS(parse_rubric_response(ld_fixture(0.5, 3.0, 3.0, 2.2), ld),
                       doctest::Contains("must be within [1.0, 5.0]"), ParseError);
}

TEST_CASE("missing criteria and missing justification are parse failures") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  CHECK_THROWS_WITH_AS(parse_rubric_response(R"({"Coherence": 3})", ld),
                       doctest::Contains("Linguistic Clarity"), ParseError);
  nlohmann::json j = nlohmann::json::parse(ld_fixture(3, 3, 3, 3));
  j["Coherence"].erase("justification");
  CHECK_THROWS_WITH_AS(parse_rubric_response(j.dump(), ld),
                       doctest::Contains("justification"), ParseError);
}

TEST_CASE("evidence-bearing rubrics demand evidence lists") {
  const RubricDef& cc = registry().get(RubricId::content_coverage);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& criterion : cc.criteria)
    j[criterion] = {{"score", 3.0},
                    {"justification", "ok"},
                    {"evidence",
                     {{{"conversation", "said a thing"}, {"addresses", true}}}}};
  RubricScore score = parse_rubric_response(j.dump(), cc);
  CHECK(score.find("Diagnosis")->evidence.size() == 1);
  CHECK(score.find("Diagnosis")->evidence[0].addresses);

  j[cc.criteria[0]].erase("evidence");
  CHECK_THROWS_WITH_AS(parse_rubric_response(j.dump(), cc),
                       doctest::Contains("evidence"), ParseError);
}

TEST_CASE("group-B evidence uses summary/reference/match spelling") {
  const RubricDef& gb = registry().get(RubricId::summary_group_b);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& criterion : gb.criteria)
    j[criterion] = {{"score", 4.0},
                    {"justification", "ok"},
                    {"evidence",
                     {{{"summary", "span"}, {"reference", "ref span"},
                       {"match", false}}}}};
  RubricScore score = parse_rubric_response(j.dump(), gb);
  const auto& span = score.find("Factuality")->evidence[0];
  CHECK(span.snippet == "span");
  CHECK(span.reference == "ref span");
  CHECK_FALSE(span.addresses);
}

TEST_CASE("evaluate_rubric repairs a malformed first reply") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  struct RepairJudge : ChatBackend {
    int calls = 0;
    std::vector<ChatRequest> requests;
    ChatResponse complete(const ChatRequest& r) override {
      requests.push_back(r);
      if (++calls == 1) return {"I rate this conversation highly."};
      return {ld_fixture(3.0, 3.0, 3.0, 3.0)};
    }
    std::string describe() const override { return "repair-judge"; }
  } judge;

  RubricOutcome outcome = evaluate_rubric(ld, conversation_inputs(), judge, "j", 1);
  REQUIRE(outcome.score.has_value());
  CHECK(outcome.score->parse_attempts == 2);
  CHECK(outcome.attempts == 2);
  // The retry shows the judge its own reply and the failure reason.
  REQUIRE(judge.requests.size() == 2);
  const auto& retry = judge.requests[1].messages;
  CHECK(retry[retry.size() - 2].role == "assistant");
  CHECK(retry.back().content.find("could not be parsed") != std::string::npos);
}

TEST_CASE("evaluate_rubric exhausts attempts into a reported failure") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  struct GarbageJudge : ChatBackend {
    int calls = 0;
    ChatResponse complete(const ChatRequest&) override {
      ++calls;
      return {"not json, ever"};
    }
    std::string describe() const override { return "garbage"; }
  } judge;

  RubricOutcome outcome = evaluate_rubric(ld, conversation_inputs(), judge, "j", 1,
                                          /*max_attempts=*/3);
  CHECK_FALSE(outcome.score.has_value());
  CHECK(outcome.attempts == 3);
  CHECK(judge.calls == 3);
  REQUIRE(outcome.error.has_value());
  CHECK(outcome.error->find("after 3 attempts") != std::string::npos);
}

TEST_CASE("a dead judge backend becomes an outcome error, not an exception") {
  const RubricDef& ld = registry().get(RubricId::language_delivery);
  struct DeadJudge : ChatBackend {
    ChatResponse complete(const ChatRequest&) override {
      throw TransportError("backend unreachable: connection failed", 4);
    }
    std::string describe() const override { return "dead"; }
  } judge;
  RubricOutcome outcome = evaluate_rubric(ld, conversation_inputs(), judge, "j", 1);
  CHECK_FALSE(outcome.score.has_value());
  REQUIRE(outcome.error.has_value());
  CHECK(outcome.error->find("unreachable") != std::string::npos);
}

TEST_CASE("stored rubric scores round-trip through their own wire shape") {
  for (RubricId id : kAllRubrics) {
    const RubricDef& def = registry().get(id);
    RubricScore score;
    score.rubric_id = id;
    double sum = 0.0;
    double v = 1.0;
    for (const auto& criterion : def.criteria) {
      CriterionScore cs;
      cs.score = v;
      cs.justification = "because";
      if (def.requires_evidence) {
        EvidenceSpan span;
        span.snippet = "quoted";
        span.addresses = true;
        if (id == RubricId::summary_group_b) span.reference = "ref";
        cs.evidence.push_back(span);
      }
      sum += v;
      v += 0.5;
      score.per_criterion.emplace_back(criterion, cs);
    }
    score.aggregate = sum / static_cast<double>(def.criteria.size());

    RubricScore back =
        parse_rubric_response(rubric_score_to_json(score, def).dump(), def);
    CHECK(back.aggregate == doctest::Approx(score.aggregate).epsilon(1e-12));
    REQUIRE(back.per_criterion.size() == score.per_criterion.size());
    for (std::size_t i = 0; i < back.per_criterion.size(); ++i) {
      CHECK(back.per_criterion[i].first == score.per_criterion[i].first);
      CHECK(back.per_criterion[i].second.score ==
            score.per_criterion[i].second.score);
    }
  }
}

TEST_CASE("all six rubric templates have well-formed sections and known slots") {
  for (RubricId id : kAllRubrics) {
    const RubricDef& def = registry().get(id);
    JudgeInputs inputs = {{"transcript", "t"},
                          {"gold_record", "g"},
                          {"summary", "s"},
                          {"reference_summary", "r"},
                          {"profile", "p"}};
    auto messages = build_judge_prompt(def, inputs);
    REQUIRE(messages.size() == 2);
    CHECK_FALSE(messages[0].content.empty());
    CHECK_FALSE(messages[1].content.empty());
    for (const auto& slot : def.required_inputs()) {
      CHECK((slot == "transcript" || slot == "gold_record" || slot == "summary" ||
             slot == "reference_summary"));
    }
  }
}
