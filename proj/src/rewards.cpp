#include "eda/rewards.hpp"

#include <algorithm>
#include <stdexcept>

#include "eda/metrics.hpp"
#include "eda/prompts.hpp"

namespace eda {

double intermediate_reward(int turn_offset) {
  if (turn_offset < 0) throw std::invalid_argument("intermediate_reward: negative turn offset");
  return std::max(0.2 - 0.025 * turn_offset, 0.0);
}

double RewardedRollout::total() const {
  double s = 0;
  for (double r : per_turn_rewards) s += r;
  return s;
}

RewardedRollout annotate_rewards(const Transcript& t) {
  if (t.aborted) throw std::invalid_argument("annotate_rewards: transcript for '" + t.entity + "' was aborted");
  RewardedRollout r;
  r.transcript = &t;
  r.per_turn_rewards.assign(t.turns.size(), 0.0);
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    if (t.turns[i].answer == Answer::yes) r.per_turn_rewards[i] = intermediate_reward(static_cast<int>(i));
  }
  if (!t.turns.empty()) {
    r.terminal_reward = t.won ? game_score(true, static_cast<int>(t.turns.size())) : 0.0;
    r.per_turn_rewards.back() += r.terminal_reward;
  }
  return r;
}

nlohmann::json to_json(const RewardedRollout& r) {
  nlohmann::json j;
  j["schema_version"] = kRewardSchemaVersion;
  if (r.transcript) {
    j["entity"] = r.transcript->entity;
    j["dataset_kind"] = std::string(to_string(r.transcript->dataset_kind));
    j["repetition"] = r.transcript->repetition;
    j["seed"] = r.transcript->seed;
    j["won"] = r.transcript->won;
    j["num_turns"] = r.transcript->num_turns;
  }
  j["per_turn_rewards"] = r.per_turn_rewards;
  j["terminal_reward"] = r.terminal_reward;
  j["total_reward"] = r.total();
  return j;
}

std::string_view to_string(BcRole role) {
  switch (role) {
    case BcRole::system: return "system";
    case BcRole::guesser: return "guesser";
    case BcRole::judge: return "judge";
  }
  return "?";
}

std::optional<BcFilter> parse_bc_filter(std::string_view s) {
  if (s == "all") return BcFilter::all;
  if (s == "things_only") return BcFilter::things_only;
  if (s == "celebs_only") return BcFilter::celebs_only;
  if (s == "success_only") return BcFilter::success_only;
  return std::nullopt;
}

BcRecord to_bc_record(const Transcript& t) {
  BcRecord rec;
  rec.entity = t.entity;
  rec.dataset_kind = t.dataset_kind;
  rec.won = t.won;
  rec.num_turns = t.num_turns;
  rec.messages.push_back({BcRole::system, guesser_instructions(t.dataset_kind), false});
  for (const Turn& turn : t.turns) {
    rec.messages.push_back({BcRole::guesser, turn.question, true});
    rec.messages.push_back({BcRole::judge, turn.judge_text(), false});
  }
  return rec;
}

namespace {

bool keep(const Transcript& t, BcFilter filter) {
  if (t.aborted) return false;
  switch (filter) {
    case BcFilter::all: return true;
    case BcFilter::things_only: return t.dataset_kind == DatasetKind::things;
    case BcFilter::celebs_only: return t.dataset_kind == DatasetKind::celebrities;
    case BcFilter::success_only: return t.won;
  }
  return false;
}

}  // namespace

std::vector<BcRecord> export_bc(const std::vector<Transcript>& transcripts, BcFilter filter) {
  std::vector<BcRecord> out;
  for (const Transcript& t : transcripts) {
    if (keep(t, filter)) out.push_back(to_bc_record(t));
  }
  return out;
}

nlohmann::json to_json(const BcRecord& rec) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const BcMessage& m : rec.messages) {
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}, {"trainable", m.trainable}});
  }
  return {{"schema_version", kBcSchemaVersion},
          {"messages", msgs},
          {"meta",
           {{"entity", rec.entity},
            {"dataset_kind", std::string(to_string(rec.dataset_kind))},
            {"won", rec.won},
            {"num_turns", rec.num_turns}}}};
}

}  // namespace eda
