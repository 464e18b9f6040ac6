#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "eda/agents.hpp"
#include "eda/game.hpp"
#include "eda/knowledge_base.hpp"
#include "eda/metrics.hpp"

namespace eda {

// Agent specs:
//   mock                 KB-backed deterministic judge
//   oracle               greedy KB guesser
//   random               seeded noisy KB guesser
//   scripted:<path>      guesser: one utterance per line; judge: "question<TAB>Answer" per line
//   llm:<model>[@<url>]  chat-completions endpoint (default base from EDA_API_BASE)
//   human                play-server only
struct AgentSpec {
  std::string kind;
  std::string arg;    // path or model
  std::string url;    // llm override, may be empty

  static AgentSpec parse(std::string_view spec);  // throws std::invalid_argument
};

class AgentFactory {
 public:
  AgentFactory(DatasetKind kind, std::shared_ptr<const KnowledgeBase> kb);

  // Replaces the HTTP transport for every llm spec (tests, offline runs).
  void set_transport(std::shared_ptr<ChatTransport> transport) { override_ = std::move(transport); }

  // Fails early on unusable specs (missing KB, unreadable script, unknown kind).
  void check_guesser(std::string_view spec) const;
  void check_judge(std::string_view spec) const;

  std::unique_ptr<Guesser> make_guesser(std::string_view spec, std::uint64_t seed, double temperature);
  std::unique_ptr<Judge> make_judge(std::string_view spec, double temperature);

  DatasetKind dataset_kind() const { return kind_; }
  const std::shared_ptr<const KnowledgeBase>& kb() const { return kb_; }

 private:
  std::shared_ptr<ChatTransport> transport_for(const std::string& url);

  DatasetKind kind_;
  std::shared_ptr<const KnowledgeBase> kb_;
  std::shared_ptr<ChatTransport> override_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<ChatTransport>> transports_;
  std::map<std::string, std::vector<std::string>> guesser_scripts_;
  std::map<std::string, std::map<std::string, Answer>> judge_scripts_;
};

struct MatchPlan {
  std::vector<std::string> entities;
  int repetitions = 5;
  std::string guesser_spec;
  std::string judge_spec;
  GameConfig config;  // config.seed is the plan seed
  int concurrency_limit = 1;
  std::optional<std::filesystem::path> output_path;  // JSONL, appended as games finish

  // Throws std::invalid_argument on repetitions < 1, concurrency_limit < 1 or no entities.
  void validate() const;
};

struct MatchResult {
  std::vector<Transcript> transcripts;  // ordered by (repetition, entity position)
  RunReport report;
  int peak_in_flight = 0;
};

MatchResult run_matches(const MatchPlan& plan, AgentFactory& factory);

enum class SplitName { train, eval, all };
std::optional<SplitName> parse_split_name(std::string_view s);

// Entities from a list file, or from the KB when no file is given, then split.
std::vector<std::string> resolve_entities(const std::optional<std::filesystem::path>& dataset,
                                          const KnowledgeBase* kb, SplitName split, int eval_size,
                                          std::uint64_t split_seed);

// Re-drives the engine from a stored transcript: recorded questions, recorded
// answers. With swap_last, the final utterance is replaced and answered by
// `judge` (or the uncertain answer when none is given). Not for aborted input.
Transcript replay_transcript(const Transcript& t, const std::optional<std::string>& swap_last = std::nullopt,
                             Judge* judge = nullptr);

}  // namespace eda
