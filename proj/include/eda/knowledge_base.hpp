#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "eda/game.hpp"

namespace eda {

enum class Ternary { yes, no, unknown };

struct KbEntity {
  std::string name;
  std::string category;
  std::vector<Ternary> values;  // aligned with KnowledgeBase::attribute_names()
};

class KbFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable after construction.
class KnowledgeBase {
 public:
  // Throws KbFormatError when empty, on duplicate names, or on misaligned values.
  KnowledgeBase(DatasetKind kind, std::vector<std::string> attribute_names, std::vector<KbEntity> entities);

  static KnowledgeBase from_json(const nlohmann::json& doc);
  static KnowledgeBase load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  DatasetKind dataset_kind() const { return kind_; }
  const std::vector<std::string>& attribute_names() const { return attributes_; }
  const std::vector<KbEntity>& entities() const { return entities_; }

  const KbEntity* find_entity(std::string_view name) const;
  std::optional<std::size_t> find_attribute(std::string_view name) const;

 private:
  DatasetKind kind_;
  std::vector<std::string> attributes_;
  std::vector<std::string> normalized_attributes_;
  std::vector<KbEntity> entities_;
  std::vector<std::string> normalized_names_;
};

using Candidates = std::vector<const KbEntity*>;

Candidates all_candidates(const KnowledgeBase& kb);

// "Is it <attribute>?" (an optional a/an article is tolerated).
std::optional<std::size_t> parse_attribute_question(const KnowledgeBase& kb, std::string_view question);

// "Is it a <name>?" / "Is it an <name>?"
const KbEntity* parse_guess(const KnowledgeBase& kb, std::string_view question);

std::string attribute_question(std::string_view attribute);
std::string guess_question(std::string_view name);

// Deterministic judge: Bingo on an entity mention, table lookup for canonical
// attribute questions, No for a guess of another KB entity, Maybe/Dunno otherwise.
Answer mock_judge(const KnowledgeBase& kb, const KbEntity& entity, std::string_view question);

// Yes keeps {true, unknown}; No keeps {false, unknown}; Maybe/Dunno keeps {unknown}.
Candidates filter_candidates(const Candidates& candidates, std::size_t attribute, Answer answer);

struct Ask {
  std::size_t attribute;
  bool operator==(const Ask&) const = default;
};
struct Guess {
  const KbEntity* entity;
  bool operator==(const Guess&) const = default;
};
using Move = std::variant<Ask, Guess>;

// Greedy balanced split: the unasked attribute minimising |#true - #false| among
// attributes that have both values present; otherwise guess the first candidate.
Move select_question(const Candidates& candidates, const std::vector<bool>& asked);

class EmptyCandidateSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CandidateState {
  Candidates candidates;
  std::vector<bool> asked;
};

// Replays a dialogue over the KB. Attribute questions filter; a wrong guess of a
// KB entity removes that entity; other turns are ignored.
CandidateState replay_history(const KnowledgeBase& kb, std::span<const Turn> history);

// Throws EmptyCandidateSet if the history contradicts every entity.
std::string oracle_guesser_next(std::span<const Turn> history, const KnowledgeBase& kb);

class MockJudge final : public Judge {
 public:
  explicit MockJudge(std::shared_ptr<const KnowledgeBase> kb);
  Answer answer(std::string_view entity, std::string_view question) override;

 private:
  std::shared_ptr<const KnowledgeBase> kb_;
};

class OracleGuesser final : public Guesser {
 public:
  explicit OracleGuesser(std::shared_ptr<const KnowledgeBase> kb);
  std::string next_question(std::span<const Turn> history) override;
  // Remaining candidates in KB order, truncated to k.
  std::optional<std::vector<std::string>> probe_top_k(std::span<const Turn> history, int k) override;

 private:
  std::shared_ptr<const KnowledgeBase> kb_;
};

// Seeded noisy guesser over the KB: asks a random unasked attribute or guesses a
// random remaining candidate. Output depends only on (seed, history).
class RandomGuesser final : public Guesser {
 public:
  RandomGuesser(std::shared_ptr<const KnowledgeBase> kb, std::uint64_t seed, double guess_probability = 0.3);
  std::string next_question(std::span<const Turn> history) override;

 private:
  std::shared_ptr<const KnowledgeBase> kb_;
  std::uint64_t seed_;
  double guess_probability_;
};

}  // namespace eda
