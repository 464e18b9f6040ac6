#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eda/game.hpp"

namespace eda {

inline constexpr int kRewardSchemaVersion = 1;
inline constexpr int kBcSchemaVersion = 1;

// Linearly decaying bonus for a Yes answer: max(0.2 - 0.025 * offset, 0), where
// offset counts the completed turns before the current one.
double intermediate_reward(int turn_offset);

struct RewardedRollout {
  const Transcript* transcript = nullptr;
  std::vector<double> per_turn_rewards;  // one per played turn
  double terminal_reward = 0;

  double total() const;
};

// Yes turns get intermediate_reward(index - 1); the last turn also gets the game
// score. Bingo turns are not Yes, so the two never stack on the winning turn.
// Throws std::invalid_argument for aborted transcripts.
RewardedRollout annotate_rewards(const Transcript& transcript);

nlohmann::json to_json(const RewardedRollout& rollout);

enum class BcRole { system, guesser, judge };
std::string_view to_string(BcRole role);

struct BcMessage {
  BcRole role = BcRole::guesser;
  std::string content;
  bool trainable = false;

  bool operator==(const BcMessage&) const = default;
};

struct BcRecord {
  std::vector<BcMessage> messages;
  std::string entity;
  DatasetKind dataset_kind = DatasetKind::things;
  bool won = false;
  int num_turns = 0;

  bool operator==(const BcRecord&) const = default;
};

enum class BcFilter { all, things_only, celebs_only, success_only };
std::optional<BcFilter> parse_bc_filter(std::string_view s);

// System message is the guesser instruction prompt; guesser turns are trainable,
// judge turns (with any forced-guess suffix) are not. Aborted transcripts are
// skipped. Output order follows input order.
BcRecord to_bc_record(const Transcript& transcript);
std::vector<BcRecord> export_bc(const std::vector<Transcript>& transcripts, BcFilter filter);

nlohmann::json to_json(const BcRecord& record);

}  // namespace eda
