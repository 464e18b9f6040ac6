#include "eda/game.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <thread>

#include "eda/metrics.hpp"
#include "eda/text.hpp"

namespace eda {

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::things ? "things" : "celebs";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view s) {
  const std::string k = text::normalize(s);
  if (k == "things") return DatasetKind::things;
  if (k == "celebs" || k == "celebrities") return DatasetKind::celebrities;
  return std::nullopt;
}

std::string_view answer_label(Answer a) {
  switch (a) {
    case Answer::yes: return "Yes";
    case Answer::no: return "No";
    case Answer::maybe: return "Maybe";
    case Answer::dunno: return "Dunno";
    case Answer::bingo: return "Bingo";
  }
  return "";
}

std::optional<Answer> parse_answer_label(std::string_view s) {
  const std::string k = text::normalize(s);
  if (k == "yes") return Answer::yes;
  if (k == "no") return Answer::no;
  if (k == "maybe") return Answer::maybe;
  if (k == "dunno") return Answer::dunno;
  if (k == "bingo") return Answer::bingo;
  return std::nullopt;
}

std::string_view answer_text(Answer a) {
  switch (a) {
    case Answer::yes: return "Yes.";
    case Answer::no: return "No.";
    case Answer::maybe: return "Maybe.";
    case Answer::dunno: return "Dunno.";
    case Answer::bingo: return "Bingo!";
  }
  return "";
}

bool answer_allowed(Answer a, DatasetKind kind) {
  if (a == Answer::maybe) return kind == DatasetKind::things;
  if (a == Answer::dunno) return kind == DatasetKind::celebrities;
  return true;
}

Answer uncertain_answer(DatasetKind kind) {
  return kind == DatasetKind::things ? Answer::maybe : Answer::dunno;
}

std::string Turn::judge_text() const {
  std::string out(answer_text(answer));
  if (forced_guess_suffix_applied) {
    out += ' ';
    out += kForcedGuessPrompt;
  }
  return out;
}

void GameConfig::validate() const {
  if (max_turns < 2) throw std::invalid_argument("max_turns must be >= 2");
  if (probe_k < 1) throw std::invalid_argument("probe_k must be >= 1");
  if (judge_temperature < 0 || guesser_temperature < 0) {
    throw std::invalid_argument("temperatures must be >= 0");
  }
  if (retry.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

bool detect_bingo(std::string_view utterance, std::string_view entity) {
  const std::string needle = text::normalize(entity);
  if (needle.empty()) return false;
  return text::normalize(utterance).find(needle) != std::string::npos;
}

std::string apply_forced_guess(std::string_view answer_text, int turn_index, int max_turns) {
  std::string out(answer_text);
  if (turn_index == max_turns - 1) {
    out += ' ';
    out += kForcedGuessPrompt;
  }
  return out;
}

namespace {

template <typename Fn>
auto with_retries(const RetryPolicy& policy, std::string_view what, Fn&& fn) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const AgentError& e) {
      if (attempt >= policy.max_retries) throw;
      const auto delay = policy.base_backoff * (1 << attempt);
      spdlog::warn("{} failed (attempt {}): {}; retrying in {} ms", what, attempt + 1, e.what(),
                   delay.count());
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
}

}  // namespace

Turn run_turn(GameState& state, Guesser& guesser, Judge& judge, const GameConfig& config) {
  if (state.finished) throw std::logic_error("run_turn called on a finished game");

  Turn turn;
  turn.index = static_cast<int>(state.turns.size()) + 1;
  turn.question = with_retries(config.retry, "guesser", [&] {
    std::string q = guesser.next_question(state.turns);
    if (text::trim(q).empty()) throw AgentError("guesser produced an empty utterance");
    return q;
  });

  if (detect_bingo(turn.question, state.entity)) {
    turn.answer = Answer::bingo;
  } else {
    Answer a = with_retries(config.retry, "judge",
                            [&] { return judge.answer(state.entity, turn.question); });
    if (a == Answer::bingo || !answer_allowed(a, config.dataset_kind)) {
      spdlog::warn("judge answer '{}' outside the {} vocabulary; using '{}'", answer_label(a),
                   to_string(config.dataset_kind), answer_label(uncertain_answer(config.dataset_kind)));
      a = uncertain_answer(config.dataset_kind);
    }
    turn.answer = a;
    turn.forced_guess_suffix_applied = turn.index == config.max_turns - 1;
  }

  state.turns.push_back(turn);
  if (turn.answer == Answer::bingo) {
    state.won = true;
    state.finished = true;
  } else if (static_cast<int>(state.turns.size()) >= config.max_turns) {
    state.finished = true;
  }
  return turn;
}

void finalize_metrics(Transcript& t) {
  t.num_yes = static_cast<int>(
      std::count_if(t.turns.begin(), t.turns.end(), [](const Turn& x) { return x.answer == Answer::yes; }));
  if (t.aborted) {
    t.num_turns = static_cast<int>(t.turns.size());
    t.score = 0.0;
    return;
  }
  t.num_turns = t.won ? static_cast<int>(t.turns.size()) : t.max_turns;
  t.score = game_score(t.won, t.num_turns);
}

Transcript play_game(std::string entity, Guesser& guesser, Judge& judge, const GameConfig& config,
                     const GameLabels& labels) {
  if (text::trim(entity).empty()) throw std::invalid_argument("entity must be non-empty");
  config.validate();

  GameState state;
  state.entity = std::move(entity);

  Transcript t;
  t.dataset_kind = config.dataset_kind;
  t.guesser_spec = labels.guesser_spec;
  t.judge_spec = labels.judge_spec;
  t.seed = config.seed;
  t.max_turns = config.max_turns;
  t.repetition = labels.repetition;
  if (config.probe_enabled) t.probe_log.emplace();

  try {
    while (!state.finished) {
      if (config.probe_enabled) {
        try {
          if (auto guesses = guesser.probe_top_k(state.turns, config.probe_k)) {
            t.probe_log->push_back({static_cast<int>(state.turns.size()) + 1, std::move(*guesses)});
          }
        } catch (const std::exception& e) {
          spdlog::warn("probe before turn {} failed: {}", state.turns.size() + 1, e.what());
        }
      }
      run_turn(state, guesser, judge, config);
    }
  } catch (const AgentError& e) {
    spdlog::error("game for entity aborted after {} turns: {}", state.turns.size(), e.what());
    t.aborted = true;
    t.abort_reason = e.what();
  }

  t.entity = std::move(state.entity);
  t.turns = std::move(state.turns);
  t.finished = state.finished;
  t.won = state.won;
  finalize_metrics(t);
  return t;
}

}  // namespace eda
