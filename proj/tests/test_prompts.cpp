#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "eda/prompts.hpp"

using namespace eda;

namespace {

std::string golden(const std::string& name) {
  std::ifstream in(std::string(EDA_TEST_DIR) + "/golden/" + name, std::ios::binary);
  EXPECT_TRUE(in) << name;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST(PromptTemplates, MatchGoldenText) {
  EXPECT_EQ(judge_template(DatasetKind::things).body, golden("judge_things.txt"));
  EXPECT_EQ(judge_template(DatasetKind::celebrities).body, golden("judge_celebs.txt"));
  EXPECT_EQ(guesser_template(DatasetKind::things).body, golden("guesser_things.txt"));
  EXPECT_EQ(guesser_template(DatasetKind::celebrities).body, golden("guesser_celebs.txt"));
  EXPECT_EQ(probe_template().body, golden("probe.txt"));
}

TEST(PromptTemplates, Placeholders) {
  EXPECT_EQ(placeholders(judge_template(DatasetKind::things).body), (std::vector<std::string>{"entity", "question"}));
  EXPECT_EQ(placeholders(judge_template(DatasetKind::celebrities).body),
            (std::vector<std::string>{"entity", "entity", "question"}));
  EXPECT_EQ(placeholders(probe_template().body), (std::vector<std::string>{"dialog history", "k"}));
}

TEST(RenderPrompt, SubstitutesEveryOccurrence) {
  const std::string out = render_prompt(judge_template(DatasetKind::celebrities),
                                        {{"entity", "Taylor Swift"}, {"question", "Is she alive?"}});
  EXPECT_EQ(out.find("{entity}"), std::string::npos);
  EXPECT_NE(out.find("celebrity: Taylor Swift respond"), std::string::npos);
  EXPECT_NE(out.find("Never say the name Taylor Swift in"), std::string::npos);
  EXPECT_TRUE(out.ends_with("Question/Guess: Is she alive?(Yes/No/Dunno)"));
}

TEST(RenderPrompt, ValuesAreNotRescanned) {
  const std::string out = render_prompt(judge_template(DatasetKind::things),
                                        {{"entity", "{question}"}, {"question", "Is it {entity}?"}});
  EXPECT_NE(out.find("entity: {question},"), std::string::npos);
  EXPECT_TRUE(out.ends_with("Question/Guess: Is it {entity}? (Yes/No/Maybe)"));
}

TEST(RenderPrompt, MissingBindingThrows) {
  try {
    render_prompt(judge_template(DatasetKind::things), {{"entity", "printer"}});
    FAIL() << "expected MissingBindingError";
  } catch (const MissingBindingError& e) {
    EXPECT_EQ(e.placeholder(), "question");
  }
}

TEST(RenderPrompt, ProbeWithFive) {
  const std::string out = render_prompt(probe_template(), {{"dialog history", "Q: Is it alive?\nA: No."}, {"k", "5"}});
  EXPECT_EQ(out,
            "Q: Is it alive?\nA: No.\nBased on the information provided, here are the top 5 most likely concrete "
            "entities I think you are thinking of:");
}

TEST(GuesserInstructions, EmptyHistory) {
  EXPECT_EQ(guesser_instructions(DatasetKind::things), golden("guesser_things.txt").substr(0, golden("guesser_things.txt").size() - 16));
  EXPECT_NE(guesser_instructions(DatasetKind::celebrities).find("deduce the celebrity"), std::string::npos);
}
