#include <doctest.h>

#include <set>

#include "dsim/exam.hpp"

using namespace dsim;

namespace {

std::vector<ExamQuestion> five_questions() {
  std::vector<ExamQuestion> qs;
  for (int i = 0; i < 5; ++i) {
    ExamQuestion q;
    q.question_id = "q" + std::to_string(i);
    q.stem = "Question " + std::to_string(i) + "?";
    q.choices = {{"correct option " + std::to_string(i), ChoiceRole::answer},
                 {"wrong option " + std::to_string(i), ChoiceRole::distractor},
                 {"irrelevant option " + std::to_string(i), ChoiceRole::irrelevant}};
    q.category = i % 2 ? StageId::medications : StageId::diagnosis;
    qs.push_back(q);
  }
  return qs;
}

// Answers with the letter of the choice whose text matches the wanted role.
struct RoleAnsweringPatient : ChatBackend {
  explicit RoleAnsweringPatient(std::vector<ExamQuestion> qs, ChoiceRole want)
      : questions(std::move(qs)), wanted(want) {}
  std::vector<ExamQuestion> questions;
  ChoiceRole wanted;

  ChatResponse complete(const ChatRequest& request) override {
    const std::string& user = request.messages.back().content;
    for (const auto& q : questions) {
      if (user.find(q.stem) == std::string::npos) continue;
      std::string target;
      for (const auto& c : q.choices)
        if (c.role == wanted) target = c.text;
      for (char letter : {'a', 'b', 'c'}) {
        const std::string line = std::string("(") + letter + ") " + target;
        if (user.find(line) != std::string::npos)
          return {std::string(1, letter)};
      }
    }
    throw ProviderError("backend rejected request", 500, "question not found");
  }
  std::string describe() const override { return "role-answering"; }
};

}  // namespace

TEST_CASE("parse_choice handles letters, punctuation, and full-text answers") {
  const std::vector<std::string> texts = {"first choice", "second choice",
                                          "third choice"};
  CHECK(parse_choice("B", texts) == 1);
  CHECK(parse_choice("b.", texts) == 1);
  CHECK(parse_choice("(a)", texts) == 0);
  CHECK(parse_choice("The answer is C.", texts) == 2);
  CHECK(parse_choice("I pick b, definitely", texts) == 1);
  CHECK(parse_choice("second choice", texts) == 1);
  CHECK(parse_choice("Second Choice!", texts) == 1);
}

TEST_CASE("ambiguous or unrecognizable replies are unparsed") {
  const std::vector<std::string> texts = {"first", "second", "third"};
  CHECK_FALSE(parse_choice("both a and b", texts).has_value());
  CHECK_FALSE(parse_choice("I am not sure", texts).has_value());
  CHECK_FALSE(parse_choice("", texts).has_value());
  // "a" as a leading article is still the letter a by the leading-token rule.
  CHECK(parse_choice("a", texts) == 0);
}

TEST_CASE("presented order depends only on seed, condition, and question id") {
  auto p1 = presented_order_for(42, ExamCondition::dialogue_only, "q1");
  CHECK(p1 == presented_order_for(42, ExamCondition::dialogue_only, "q1"));
  // Different coordinates eventually give different orders.
  std::set<std::array<int, 3>> seen;
  for (int s = 0; s < 30; ++s)
    seen.insert(presented_order_for(s, ExamCondition::dialogue_only, "q1"));
  CHECK(seen.size() > 1);
  // Every order is a permutation of {0,1,2}.
  for (const auto& perm : choice_permutations()) {
    std::set<int> vals(perm.begin(), perm.end());
    CHECK(vals == std::set<int>{0, 1, 2});
  }
}

TEST_CASE("a gold-answering patient scores 1.0 under both conditions") {
  auto qs = five_questions();
  RoleAnsweringPatient patient(qs, ChoiceRole::answer);
  PromptLibrary prompts = PromptLibrary::with_defaults();

  Transcript t;
  t.turns = {{Speaker::doctor, StageId::diagnosis, "Recap.", false}};
  ExamResult dialogue = administer_exam(qs, ExamCondition::dialogue_only, t,
                                        PatientProfile{}, patient, prompts, "p", 5);
  CHECK(dialogue.accuracy == 1.0);

  SummaryResult s{"Summary text."};
  ExamResult summary = administer_exam(qs, ExamCondition::summary_only, s,
                                       PatientProfile{}, patient, prompts, "p", 5);
  CHECK(summary.accuracy == 1.0);
  CHECK(summary.per_question.size() == 5);
}

TEST_CASE("an irrelevant-answering patient scores 0.0") {
  auto qs = five_questions();
  RoleAnsweringPatient patient(qs, ChoiceRole::irrelevant);
  Transcript t;
  t.turns = {{Speaker::doctor, StageId::diagnosis, "Recap.", false}};
  ExamResult r = administer_exam(qs, ExamCondition::dialogue_only, t,
                                 PatientProfile{}, patient,
                                 PromptLibrary::with_defaults(), "p", 5);
  CHECK(r.accuracy == 0.0);
  for (const auto& item : r.per_question) {
    CHECK_FALSE(item.correct);
    CHECK_FALSE(item.unparsed);  // parsed fine, just wrong
  }
}

TEST_CASE("context type must match the condition") {
  auto qs = five_questions();
  RoleAnsweringPatient patient(qs, ChoiceRole::answer);
  Transcript t;
  SummaryResult s{"text"};
  CHECK_THROWS_AS(administer_exam(qs, ExamCondition::summary_only, t,
                                  PatientProfile{}, patient,
                                  PromptLibrary::with_defaults(), "p", 5),
                  ValidationError);
  CHECK_THROWS_AS(administer_exam(qs, ExamCondition::dialogue_only, s,
                                  PatientProfile{}, patient,
                                  PromptLibrary::with_defaults(), "p", 5),
                  ValidationError);
}

TEST_CASE("an empty question list refuses to run") {
  RoleAnsweringPatient patient({}, ChoiceRole::answer);
  Transcript t;
  CHECK_THROWS_AS(administer_exam({}, ExamCondition::dialogue_only, t,
                                  PatientProfile{}, patient,
                                  PromptLibrary::with_defaults(), "p", 5),
                  ValidationError);
}

TEST_CASE("at most 10 questions are asked, in scenario order") {
  std::vector<ExamQuestion> qs;
  for (int i = 0; i < 14; ++i) {
    ExamQuestion q;
    q.question_id = "q" + std::to_string(i);
    q.stem = "Stem " + std::to_string(i);
    q.choices = {{"yes", ChoiceRole::answer},
                 {"no", ChoiceRole::distractor},
                 {"blue", ChoiceRole::irrelevant}};
    q.category = StageId::diagnosis;
    qs.push_back(q);
  }
  struct AlwaysA : ChatBackend {
    ChatResponse complete(const ChatRequest&) override { return {"a"}; }
    std::string describe() const override { return "always-a"; }
  } patient;
  Transcript t;
  ExamResult r = administer_exam(qs, ExamCondition::dialogue_only, t,
                                 PatientProfile{}, patient,
                                 PromptLibrary::with_defaults(), "p", 5);
  REQUIRE(r.per_question.size() == 10);
  for (int i = 0; i < 10; ++i)
    CHECK(r.per_question[i].question_id == "q" + std::to_string(i));
}

TEST_CASE("a backend failure marks that question incorrect and continues") {
  auto qs = five_questions();
  struct FailSecond : ChatBackend {
    int calls = 0;
    ChatResponse complete(const ChatRequest&) override {
      if (++calls == 2) throw TransportError("backend unreachable: connection failed", 4);
      return {"a"};
    }
    std::string describe() const override { return "fail-second"; }
  } patient;
  Transcript t;
  ExamResult r = administer_exam(qs, ExamCondition::dialogue_only, t,
                                 PatientProfile{}, patient,
                                 PromptLibrary::with_defaults(), "p", 5);
  REQUIRE(r.per_question.size() == 5);
  const ExamItem& failed = r.per_question[1];
  CHECK(failed.unparsed);
  CHECK_FALSE(failed.correct);
  REQUIRE(failed.error.has_value());
  CHECK(failed.error->find("unreachable") != std::string::npos);
  // The remaining questions were still asked.
  CHECK_FALSE(r.per_question[4].error.has_value());
}

TEST_CASE("unparsed replies count as incorrect and are flagged") {
  auto qs = five_questions();
  struct Rambler : ChatBackend {
    ChatResponse complete(const ChatRequest&) override {
      return {"Hmm, could you repeat the question?"};
    }
    std::string describe() const override { return "rambler"; }
  } patient;
  Transcript t;
  ExamResult r = administer_exam(qs, ExamCondition::dialogue_only, t,
                                 PatientProfile{}, patient,
                                 PromptLibrary::with_defaults(), "p", 5);
  CHECK(r.accuracy == 0.0);
  for (const auto& item : r.per_question) {
    CHECK(item.unparsed);
    CHECK_FALSE(item.chosen_index.has_value());
  }
}

TEST_CASE("the patient prompt never contains the gold record") {
  auto qs = five_questions();
  struct PromptSniffer : ChatBackend {
    std::vector<std::string> seen;
    ChatResponse complete(const ChatRequest& r) override {
      for (const auto& m : r.messages) seen.push_back(m.content);
      return {"a"};
    }
    std::string describe() const override { return "sniffer"; }
  } patient;
  Transcript t;
  t.turns = {{Speaker::doctor, StageId::diagnosis, "We talked about things.", false}};
  administer_exam(qs, ExamCondition::dialogue_only, t, PatientProfile{}, patient,
                  PromptLibrary::with_defaults(), "p", 5);
  for (const auto& text : patient.seen)
    CHECK(text.find("Authoritative discharge record") == std::string::npos);
}

TEST_CASE("exam results serialize with null for unparsed choices") {
  ExamResult r;
  r.condition = ExamCondition::summary_only;
  r.seed = 9;
  ExamItem parsed;
  parsed.question_id = "q0";
  parsed.chosen_index = 2;
  parsed.correct = true;
  ExamItem unparsed;
  unparsed.question_id = "q1";
  unparsed.unparsed = true;
  r.per_question = {parsed, unparsed};
  r.accuracy = 0.5;

  nlohmann::json j = to_json(r);
  CHECK(j["per_question"][0]["chosen_index"] == 2);
  CHECK(j["per_question"][1]["chosen_index"].is_null());

  ExamResult back = exam_result_from_json(j);
  CHECK(back.condition == ExamCondition::summary_only);
  CHECK(back.per_question[0].chosen_index == 2);
  CHECK_FALSE(back.per_question[1].chosen_index.has_value());
  CHECK(back.accuracy == 0.5);
}
