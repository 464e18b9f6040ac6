#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eda {

enum class DatasetKind { things, celebrities };

// Closed vocabulary of judge responses. Bingo is never produced by a judge;
// the engine assigns it when the guesser names the entity.
enum class Answer { yes, no, maybe, dunno, bingo };

std::string_view to_string(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view s);

// "Yes", "No", "Maybe", "Dunno", "Bingo"
std::string_view answer_label(Answer a);
std::optional<Answer> parse_answer_label(std::string_view s);

// Text the judge says: "Yes.", "No.", "Maybe.", "Dunno.", "Bingo!"
std::string_view answer_text(Answer a);

bool answer_allowed(Answer a, DatasetKind kind);

// Maybe for Things, Dunno for Celebrities.
Answer uncertain_answer(DatasetKind kind);

inline constexpr std::string_view kForcedGuessPrompt = "You must guess now, what's it?";
inline constexpr int kDefaultMaxTurns = 20;

struct Turn {
  int index = 0;
  std::string question;
  Answer answer = Answer::no;
  bool forced_guess_suffix_applied = false;

  // The judge's reply as seen by the guesser, including any forced-guess suffix.
  std::string judge_text() const;

  bool operator==(const Turn&) const = default;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_backoff{500};
};

struct GameConfig {
  int max_turns = kDefaultMaxTurns;
  DatasetKind dataset_kind = DatasetKind::things;
  double judge_temperature = 0.2;
  double guesser_temperature = 0.8;
  std::uint64_t seed = 0;
  bool probe_enabled = false;
  int probe_k = 5;
  RetryPolicy retry;

  // Throws std::invalid_argument when max_turns < 2 or probe_k < 1.
  void validate() const;
};

struct GameState {
  std::string entity;
  std::vector<Turn> turns;
  bool finished = false;
  bool won = false;
};

struct ProbeRecord {
  int turn_index = 0;  // index of the guesser turn the probe preceded
  std::vector<std::string> guesses;

  bool operator==(const ProbeRecord&) const = default;
};

struct Transcript {
  std::string entity;
  DatasetKind dataset_kind = DatasetKind::things;
  std::vector<Turn> turns;
  bool finished = false;
  bool won = false;
  std::string guesser_spec;
  std::string judge_spec;
  std::uint64_t seed = 0;
  int max_turns = kDefaultMaxTurns;
  int repetition = 0;
  int num_turns = 0;
  int num_yes = 0;
  double score = 0.0;
  std::optional<std::vector<ProbeRecord>> probe_log;
  bool aborted = false;
  std::string abort_reason;

  bool operator==(const Transcript&) const = default;
};

// Raised by agents for failures that may succeed on retry (transport, empty output).
class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Guesser {
 public:
  virtual ~Guesser() = default;

  // Next utterance (question or guess) given the dialogue so far.
  virtual std::string next_question(std::span<const Turn> history) = 0;

  // Current top-k candidate entities, or nullopt when the agent cannot be probed.
  virtual std::optional<std::vector<std::string>> probe_top_k(std::span<const Turn> history, int k) {
    (void)history;
    (void)k;
    return std::nullopt;
  }
};

// The judge only ever sees the entity and the current question.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual Answer answer(std::string_view entity, std::string_view question) = 0;
};

bool detect_bingo(std::string_view utterance, std::string_view entity);

std::string apply_forced_guess(std::string_view answer_text, int turn_index, int max_turns);

// Plays one turn and appends it to state. Agent calls that throw AgentError are
// retried per config.retry; the turn is appended only if every call succeeds.
Turn run_turn(GameState& state, Guesser& guesser, Judge& judge, const GameConfig& config);

struct GameLabels {
  std::string guesser_spec;
  std::string judge_spec;
  int repetition = 0;
};

// Plays to completion. An agent failure that survives retries yields an aborted
// transcript instead of an exception.
Transcript play_game(std::string entity, Guesser& guesser, Judge& judge, const GameConfig& config,
                     const GameLabels& labels = {});

// Fills num_turns, num_yes and score from turns/won/max_turns.
void finalize_metrics(Transcript& t);

}  // namespace eda
