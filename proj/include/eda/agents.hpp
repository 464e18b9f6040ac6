#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eda/game.hpp"

namespace eda {

class UnrecognizedAnswer : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matches the leading word of a judge completion against the dataset vocabulary.
// "Yes." / "  maybe!!" / "No, it is not" all resolve; anything else throws UnrecognizedAnswer.
Answer normalize_answer(std::string_view raw, DatasetKind kind);

// Splits a probe completion into at most k candidates, preferring numbered-list
// items and falling back to comma / ampersand / newline separated tokens.
std::vector<std::string> parse_probe_completion(std::string_view completion, int k);

// ---------------------------------------------------------------------------
// Chat-completion wire protocol

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

nlohmann::json to_json(const ChatRequest& request);

// Extracts choices[0].message.content; throws AgentError on a malformed body.
std::string parse_chat_response(const nlohmann::json& body);

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns the assistant completion text. Throws AgentError on transport failure.
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct HttpTransportOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  int max_in_flight = 4;
  std::chrono::milliseconds min_interval{0};  // per-provider spacing between request starts
  std::chrono::seconds timeout{60};

  // Reads EDA_API_BASE and EDA_API_KEY; unset variables keep the defaults.
  static HttpTransportOptions from_env();
};

// POSTs {base_url}/chat/completions with a bearer token.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(HttpTransportOptions options);
  std::string complete(const ChatRequest& request) override;

 private:
  void wait_for_slot();

  HttpTransportOptions options_;
  std::string scheme_host_;
  std::string path_prefix_;
  std::counting_semaphore<> in_flight_;
  std::mutex pace_mu_;
  std::chrono::steady_clock::time_point next_start_{};
};

// ---------------------------------------------------------------------------
// Dialogue formatting

// Guesser conversation: the instruction prompt as the first user message, then
// alternating assistant (guesser) and user (judge) messages.
std::vector<ChatMessage> guesser_messages(std::span<const Turn> history, DatasetKind kind);

// "Q: <question>\nA: <judge reply>" per turn, newline separated.
std::string format_history_text(std::span<const Turn> history);

// ---------------------------------------------------------------------------
// LLM agents

struct LlmAgentOptions {
  std::string model;
  DatasetKind dataset_kind = DatasetKind::things;
  double temperature = 0.0;
  int unrecognized_retries = 2;  // judge only: re-samples before falling back
};

Answer llm_judge_answer(ChatTransport& transport, const LlmAgentOptions& options, std::string_view entity,
                        std::string_view question);

std::string llm_guesser_next(ChatTransport& transport, const LlmAgentOptions& options,
                             std::span<const Turn> history);

std::vector<std::string> probe_top_k(ChatTransport& transport, const LlmAgentOptions& options,
                                     std::span<const Turn> history, int k);

class LlmJudge final : public Judge {
 public:
  LlmJudge(std::shared_ptr<ChatTransport> transport, LlmAgentOptions options);
  Answer answer(std::string_view entity, std::string_view question) override;

 private:
  std::shared_ptr<ChatTransport> transport_;
  LlmAgentOptions options_;
};

class LlmGuesser final : public Guesser {
 public:
  LlmGuesser(std::shared_ptr<ChatTransport> transport, LlmAgentOptions options);
  std::string next_question(std::span<const Turn> history) override;
  std::optional<std::vector<std::string>> probe_top_k(std::span<const Turn> history, int k) override;

 private:
  std::shared_ptr<ChatTransport> transport_;
  LlmAgentOptions options_;
};

// ---------------------------------------------------------------------------
// Scripted agents (replays, tests)

class ScriptedGuesser final : public Guesser {
 public:
  // With cycle=false, running past the script is an AgentError.
  explicit ScriptedGuesser(std::vector<std::string> lines, bool cycle = false);
  std::string next_question(std::span<const Turn> history) override;

 private:
  std::vector<std::string> lines_;
  bool cycle_;
};

// Answers by normalized question text; unknown questions get the fallback.
class ScriptedJudge final : public Judge {
 public:
  ScriptedJudge(std::map<std::string, Answer> answers, Answer fallback);
  Answer answer(std::string_view entity, std::string_view question) override;

 private:
  std::map<std::string, Answer> answers_;
  Answer fallback_;
};

}  // namespace eda
