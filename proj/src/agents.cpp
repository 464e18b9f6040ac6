#include "eda/agents.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cctype>
#include <cstdlib>
#include <regex>
#include <thread>

#include "eda/prompts.hpp"
#include "eda/text.hpp"

namespace eda {

Answer normalize_answer(std::string_view raw, DatasetKind kind) {
  std::string_view s = text::trim(raw);
  while (!s.empty() && !std::isalnum(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  std::size_t n = 0;
  while (n < s.size() && std::isalpha(static_cast<unsigned char>(s[n]))) ++n;
  const std::string word = text::to_lower(s.substr(0, n));

  Answer a;
  if (word == "yes") {
    a = Answer::yes;
  } else if (word == "no") {
    a = Answer::no;
  } else if (word == "maybe") {
    a = Answer::maybe;
  } else if (word == "dunno") {
    a = Answer::dunno;
  } else {
    throw UnrecognizedAnswer("unrecognized judge answer: '" + std::string(raw) + "'");
  }
  if (!answer_allowed(a, kind)) {
    throw UnrecognizedAnswer("answer '" + word + "' is not allowed for " + std::string(to_string(kind)));
  }
  return a;
}

namespace {

std::string clean_candidate(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '"' || s.front() == '\'')) {
    s.remove_prefix(1);
    s = text::trim(s);
  }
  while (!s.empty() && (s.back() == '.' || s.back() == '"' || s.back() == '\'' || s.back() == ',')) {
    s.remove_suffix(1);
    s = text::trim(s);
  }
  return std::string(s);
}

}  // namespace

std::vector<std::string> parse_probe_completion(std::string_view completion, int k) {
  std::vector<std::string> out;
  if (k < 1) return out;

  static const std::regex numbered(R"(^\s*\d+\s*[.):]\s*(.*)$)");
  std::vector<std::string> numbered_items;
  for (const std::string& line : text::split_lines(completion)) {
    std::smatch m;
    if (std::regex_match(line, m, numbered)) {
      std::string c = clean_candidate(m[1].str());
      if (!c.empty()) numbered_items.push_back(std::move(c));
    }
  }

  if (!numbered_items.empty()) {
    out = std::move(numbered_items);
  } else {
    std::string token;
    auto flush = [&] {
      std::string c = clean_candidate(token);
      if (!c.empty()) out.push_back(std::move(c));
      token.clear();
    };
    for (char c : completion) {
      if (c == ',' || c == '&' || c == '\n') {
        flush();
      } else {
        token.push_back(c);
      }
    }
    flush();
  }
  if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
  return out;
}

nlohmann::json to_json(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const ChatMessage& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return {{"model", request.model}, {"messages", messages}, {"temperature", request.temperature}};
}

std::string parse_chat_response(const nlohmann::json& body) {
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw AgentError(std::string("malformed chat completion response: ") + e.what());
  }
}

HttpTransportOptions HttpTransportOptions::from_env() {
  HttpTransportOptions o;
  if (const char* base = std::getenv("EDA_API_BASE"); base != nullptr && *base != '\0') o.base_url = base;
  if (const char* key = std::getenv("EDA_API_KEY"); key != nullptr) o.api_key = key;
  return o;
}

HttpChatTransport::HttpChatTransport(HttpTransportOptions options)
    : options_(std::move(options)), in_flight_(std::max(1, options_.max_in_flight)) {
  std::string_view url = options_.base_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw std::invalid_argument("base URL needs a scheme: " + options_.base_url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_ = std::string(url.substr(0, path_start));
  path_prefix_ = path_start == std::string_view::npos ? "" : std::string(url.substr(path_start));
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

void HttpChatTransport::wait_for_slot() {
  std::chrono::steady_clock::time_point start;
  {
    std::lock_guard lock(pace_mu_);
    const auto now = std::chrono::steady_clock::now();
    start = std::max(now, next_start_);
    next_start_ = start + options_.min_interval;
  }
  std::this_thread::sleep_until(start);
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};
  wait_for_slot();

  httplib::Client client(scheme_host_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);

  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto res = client.Post(path_prefix_ + "/chat/completions", headers, to_json(request).dump(), "application/json");
  if (!res) throw AgentError("chat request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw AgentError("chat request returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw AgentError(std::string("chat response is not JSON: ") + e.what());
  }
  return parse_chat_response(body);
}

std::vector<ChatMessage> guesser_messages(std::span<const Turn> history, DatasetKind kind) {
  std::vector<ChatMessage> messages;
  messages.push_back({"user", guesser_instructions(kind)});
  for (const Turn& t : history) {
    messages.push_back({"assistant", t.question});
    messages.push_back({"user", t.judge_text()});
  }
  return messages;
}

std::string format_history_text(std::span<const Turn> history) {
  std::string out;
  for (const Turn& t : history) {
    if (!out.empty()) out += '\n';
    out += "Q: " + t.question + "\nA: " + t.judge_text();
  }
  return out;
}

Answer llm_judge_answer(ChatTransport& transport, const LlmAgentOptions& options, std::string_view entity,
                        std::string_view question) {
  ChatRequest req;
  req.model = options.model;
  req.temperature = options.temperature;
  req.messages.push_back({"user", render_prompt(judge_template(options.dataset_kind),
                                                {{"entity", std::string(entity)}, {"question", std::string(question)}})});
  for (int attempt = 0;; ++attempt) {
    const std::string completion = transport.complete(req);
    try {
      return normalize_answer(completion, options.dataset_kind);
    } catch (const UnrecognizedAnswer& e) {
      if (attempt >= options.unrecognized_retries) {
        const Answer fallback = uncertain_answer(options.dataset_kind);
        spdlog::warn("{}; falling back to '{}'", e.what(), answer_label(fallback));
        return fallback;
      }
    }
  }
}

std::string llm_guesser_next(ChatTransport& transport, const LlmAgentOptions& options,
                             std::span<const Turn> history) {
  ChatRequest req{options.model, guesser_messages(history, options.dataset_kind), options.temperature};
  std::string utterance = text::single_line(transport.complete(req));
  if (utterance.empty()) throw AgentError("guesser returned an empty completion");
  return utterance;
}

std::vector<std::string> probe_top_k(ChatTransport& transport, const LlmAgentOptions& options,
                                     std::span<const Turn> history, int k) {
  if (k < 1) throw std::invalid_argument("probe k must be >= 1");
  ChatRequest req;
  req.model = options.model;
  req.temperature = options.temperature;
  req.messages.push_back({"user", render_prompt(probe_template(), {{"dialog history", format_history_text(history)},
                                                                   {"k", std::to_string(k)}})});
  std::vector<std::string> guesses = parse_probe_completion(transport.complete(req), k);
  if (guesses.empty()) spdlog::warn("probe completion had no parseable candidates");
  return guesses;
}

LlmJudge::LlmJudge(std::shared_ptr<ChatTransport> transport, LlmAgentOptions options)
    : transport_(std::move(transport)), options_(std::move(options)) {}

Answer LlmJudge::answer(std::string_view entity, std::string_view question) {
  return llm_judge_answer(*transport_, options_, entity, question);
}

LlmGuesser::LlmGuesser(std::shared_ptr<ChatTransport> transport, LlmAgentOptions options)
    : transport_(std::move(transport)), options_(std::move(options)) {}

std::string LlmGuesser::next_question(std::span<const Turn> history) {
  return llm_guesser_next(*transport_, options_, history);
}

std::optional<std::vector<std::string>> LlmGuesser::probe_top_k(std::span<const Turn> history, int k) {
  return eda::probe_top_k(*transport_, options_, history, k);
}

ScriptedGuesser::ScriptedGuesser(std::vector<std::string> lines, bool cycle)
    : lines_(std::move(lines)), cycle_(cycle) {
  if (lines_.empty()) throw std::invalid_argument("scripted guesser needs at least one line");
}

std::string ScriptedGuesser::next_question(std::span<const Turn> history) {
  std::size_t i = history.size();
  if (i >= lines_.size()) {
    if (!cycle_) throw AgentError("scripted guesser ran out of lines");
    i %= lines_.size();
  }
  return lines_[i];
}

ScriptedJudge::ScriptedJudge(std::map<std::string, Answer> answers, Answer fallback) : fallback_(fallback) {
  for (auto& [q, a] : answers) answers_.emplace(text::normalize(q), a);
}

Answer ScriptedJudge::answer(std::string_view entity, std::string_view question) {
  (void)entity;
  auto it = answers_.find(text::normalize(question));
  return it == answers_.end() ? fallback_ : it->second;
}

}  // namespace eda
