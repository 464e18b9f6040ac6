#include <gtest/gtest.h>

#include "eda/knowledge_base.hpp"
#include "support/generators.hpp"
#include "support/policy_oracle.hpp"

using namespace eda;

namespace {

const char* kSmallKb = R"({
  "dataset_kind": "things",
  "attributes": ["alive", "electronic", "a musical instrument"],
  "entities": [
    {"name": "dog", "category": "animal", "attributes": {"alive": true, "electronic": false}},
    {"name": "printer", "attributes": {"alive": false, "electronic": true, "a musical instrument": false}},
    {"name": "guitar", "attributes": {"alive": false, "electronic": null, "a musical instrument": true}}
  ]
})";

std::shared_ptr<const KnowledgeBase> small_kb() {
  return std::make_shared<const KnowledgeBase>(KnowledgeBase::from_json(nlohmann::json::parse(kSmallKb)));
}

}  // namespace

TEST(KbLoad, JsonRoundTripAndUnknowns) {
  auto kb = small_kb();
  EXPECT_EQ(kb->entities().size(), 3u);
  EXPECT_EQ(kb->entities()[0].values[2], Ternary::unknown);  // omitted
  EXPECT_EQ(kb->entities()[2].values[1], Ternary::unknown);  // null
  EXPECT_EQ(kb->entities()[0].category, "animal");
  KnowledgeBase again = KnowledgeBase::from_json(kb->to_json());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(again.entities()[i].values, kb->entities()[i].values);
}

TEST(KbLoad, Rejections) {
  auto bad = [](const char* text) { return KnowledgeBase::from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"attributes":["a"],"entities":[]})"), KbFormatError);
  EXPECT_THROW(bad(R"({"attributes":["a","A"],"entities":[{"name":"x"}]})"), KbFormatError);
  EXPECT_THROW(bad(R"({"attributes":["a"],"entities":[{"name":"x"},{"name":" X "}]})"), KbFormatError);
  EXPECT_THROW(bad(R"({"attributes":["a"],"entities":[{"name":"x","attributes":{"b":true}}]})"), KbFormatError);
  EXPECT_THROW(bad(R"({"attributes":["a"],"entities":[{"name":"x","attributes":{"a":"yes"}}]})"), KbFormatError);
  EXPECT_THROW(bad(R"({"dataset_kind":"movies","attributes":["a"],"entities":[{"name":"x"}]})"), KbFormatError);
  EXPECT_THROW(bad(R"({"entities":[{"name":"x"}]})"), KbFormatError);
  EXPECT_THROW(KnowledgeBase::load("/nonexistent/kb.json"), std::runtime_error);
}

TEST(KbQuestions, Parsing) {
  auto kb = small_kb();
  EXPECT_EQ(parse_attribute_question(*kb, "Is it alive?"), 0u);
  EXPECT_EQ(parse_attribute_question(*kb, "is it  ELECTRONIC ?"), 1u);
  EXPECT_EQ(parse_attribute_question(*kb, "Is it a musical instrument?"), 2u);
  EXPECT_EQ(parse_attribute_question(*kb, "Is it an alive?"), 0u);
  EXPECT_EQ(parse_attribute_question(*kb, "Does it bark?"), std::nullopt);
  EXPECT_EQ(parse_guess(*kb, "Is it a printer?"), &kb->entities()[1]);
  EXPECT_EQ(parse_guess(*kb, "Is it printer?"), nullptr);
  EXPECT_EQ(attribute_question("alive"), "Is it alive?");
  EXPECT_EQ(guess_question("dog"), "Is it a dog?");
}

TEST(MockJudge, AnswersFromTable) {
  auto kb = small_kb();
  MockJudge j(kb);
  EXPECT_EQ(j.answer("dog", "Is it alive?"), Answer::yes);
  EXPECT_EQ(j.answer("printer", "Is it alive?"), Answer::no);
  EXPECT_EQ(j.answer("guitar", "Is it electronic?"), Answer::maybe);
  EXPECT_EQ(j.answer("dog", "Does it bark?"), Answer::maybe);
  EXPECT_EQ(j.answer("dog", "Is it a printer?"), Answer::no);
  EXPECT_EQ(j.answer("dog", "Is it a dog?"), Answer::bingo);
  EXPECT_EQ(j.answer("cat", "Is it a cat?"), Answer::bingo);
  EXPECT_EQ(j.answer("cat", "Is it alive?"), Answer::maybe);
}

TEST(Filter, TernarySemantics) {
  auto kb = small_kb();
  const Candidates all = all_candidates(*kb);
  EXPECT_EQ(filter_candidates(all, 1, Answer::yes).size(), 2u);    // printer, guitar(unknown)
  EXPECT_EQ(filter_candidates(all, 1, Answer::no).size(), 2u);     // dog, guitar(unknown)
  EXPECT_EQ(filter_candidates(all, 1, Answer::maybe).size(), 1u);  // guitar
  EXPECT_EQ(filter_candidates(all, 2, Answer::dunno).size(), 1u);  // dog
  EXPECT_THROW(filter_candidates(all, 0, Answer::bingo), std::invalid_argument);
}

TEST(Select, BalancedSplitFirstDeclaredOnTies) {
  auto kb = gen::balanced_kb(4, 2);
  const Candidates all = all_candidates(kb);
  EXPECT_EQ(select_question(all, {false, false}), Move{Ask{0}});
  EXPECT_EQ(select_question(all, {true, false}), Move{Ask{1}});
  EXPECT_EQ(select_question(all, {true, true}), Move{Guess{all[0]}});
  EXPECT_EQ(select_question({all[2]}, {false, false}), Move{Guess{all[2]}});
  EXPECT_THROW(select_question({}, {}), EmptyCandidateSet);
}

TEST(Select, PrefersSmallestImbalance) {
  // attr0 splits 3/1, attr1 splits 2/2.
  KnowledgeBase kb = gen::kb_from_cells({0, 0, 0, 0, 0, 1, 1, 1}, 4, 2);
  EXPECT_EQ(select_question(all_candidates(kb), {false, false}), Move{Ask{1}});
}

TEST(Replay, WrongGuessRemovesCandidate) {
  auto kb = small_kb();
  std::vector<Turn> h{{1, "Is it a printer?", Answer::no, false}, {2, "Is it alive?", Answer::no, false}};
  CandidateState s = replay_history(*kb, h);
  ASSERT_EQ(s.candidates.size(), 1u);
  EXPECT_EQ(s.candidates[0]->name, "guitar");
  EXPECT_TRUE(s.asked[0]);
}

TEST(OracleGuesser, InconsistentHistoryIsAgentError) {
  auto kb = std::make_shared<const KnowledgeBase>(gen::balanced_kb(2, 1));
  OracleGuesser g(kb);
  std::vector<Turn> h{{1, "Is it attr0?", Answer::maybe, false}};
  EXPECT_THROW(g.next_question(h), AgentError);
}

TEST(OracleGuesser, ProbeListsRemainingCandidates) {
  auto kb = std::make_shared<const KnowledgeBase>(gen::balanced_kb(8, 3));
  OracleGuesser g(kb);
  std::vector<Turn> h{{1, "Is it attr0?", Answer::yes, false}};
  auto p = g.probe_top_k(h, 3);
  ASSERT_TRUE(p);
  EXPECT_EQ(*p, (std::vector<std::string>{"entity_00", "entity_01", "entity_02"}));
}

// log2(n) questions and one guess on a perfectly balanced KB.
TEST(OracleBound, BalancedKbsTakeLogPlusOne) {
  for (int m = 1; m <= 6; ++m) {
    const int n = 1 << m;
    auto kb = std::make_shared<const KnowledgeBase>(gen::balanced_kb(n, m));
    for (const KbEntity& e : kb->entities()) {
      OracleGuesser g(kb);
      MockJudge j(kb);
      GameConfig c;
      Transcript t = play_game(e.name, g, j, c);
      ASSERT_TRUE(t.won) << e.name;
      ASSERT_EQ(t.num_turns, m + 1) << e.name;
    }
  }
}

// Property: the string-level engine run and the pointer-level simulation agree.
TEST(GreedyProperty, EngineMatchesSimulation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const gen::KbShape shape{gen::rand_int(rng, 1, 8), gen::rand_int(rng, 1, 5), gen::coin(rng)};
    auto kb = std::make_shared<const KnowledgeBase>(gen::rand_kb(rng, shape));
    for (const KbEntity& e : kb->entities()) {
      OracleGuesser g(kb);
      MockJudge j(kb);
      GameConfig c;
      c.max_turns = 40;
      Transcript t = play_game(e.name, g, j, c);
      ASSERT_TRUE(t.won);
      ASSERT_EQ(t.num_turns, gen::greedy_turns(*kb, e)) << "trial " << trial << " " << e.name;
    }
  }
}

// Property: on fully known binary KBs greedy stays within one turn of optimal.
TEST(GreedyProperty, WithinOneOfOptimalOnRandomBinaryKbs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto kb = gen::rand_kb(rng, {gen::rand_int(rng, 1, 8), gen::rand_int(rng, 1, 4), false});
    gen::OptimalPolicy opt(kb);
    ASSERT_LE(gen::greedy_worst_case(kb), opt.worst_case() + 1) << "trial " << trial;
  }
}

// Yes/No keep unknown-valued candidates, so with unknowns the greedy policy can
// fall more than one turn behind an exact-inference optimum.
TEST(GreedyProperty, UnknownsCanCostMoreThanOneTurn) {
  const KnowledgeBase kb = gen::kb_from_cells({2, 2, 1, 0, 0}, 5, 1);
  EXPECT_EQ(gen::OptimalPolicy(kb).worst_case(), 3);
  EXPECT_EQ(gen::greedy_worst_case(kb), 5);
}

TEST(OptimalPolicy, KnownValues) {
  EXPECT_EQ(gen::OptimalPolicy(gen::balanced_kb(8, 3)).worst_case(), 4);
  EXPECT_EQ(gen::OptimalPolicy(gen::balanced_kb(2, 1)).worst_case(), 2);
  EXPECT_EQ(gen::OptimalPolicy(gen::kb_from_cells({0}, 1, 1)).worst_case(), 1);
  // Three identical rows: nothing to ask, guess them in turn.
  EXPECT_EQ(gen::OptimalPolicy(gen::kb_from_cells({0, 0, 0}, 3, 1)).worst_case(), 3);
  // Three distinct entities on one ternary attribute: one question, one guess.
  EXPECT_EQ(gen::OptimalPolicy(gen::kb_from_cells({0, 1, 2}, 3, 1)).worst_case(), 2);
}

TEST(RandomGuesser, DeterministicPerSeedAndHistory) {
  auto kb = std::make_shared<const KnowledgeBase>(gen::balanced_kb(16, 4));
  RandomGuesser a(kb, 99), b(kb, 99), c(kb, 100);
  std::vector<Turn> h;
  std::vector<std::string> qa, qc;
  for (int i = 0; i < 6; ++i) {
    const std::string q = a.next_question(h);
    EXPECT_EQ(b.next_question(h), q);
    qa.push_back(q);
    qc.push_back(c.next_question(h));
    h.push_back({i + 1, q, Answer::no, false});
  }
  EXPECT_NE(qa, qc);
}
