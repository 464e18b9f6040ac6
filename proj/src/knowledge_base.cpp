#include "eda/knowledge_base.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "eda/random.hpp"
#include "eda/text.hpp"

namespace eda {

KnowledgeBase::KnowledgeBase(DatasetKind kind, std::vector<std::string> attribute_names,
                             std::vector<KbEntity> entities)
    : kind_(kind), attributes_(std::move(attribute_names)), entities_(std::move(entities)) {
  if (entities_.empty()) throw KbFormatError("knowledge base has no entities");
  std::set<std::string> seen_attrs;
  for (const std::string& a : attributes_) {
    std::string n = text::normalize(a);
    if (n.empty()) throw KbFormatError("empty attribute name");
    if (!seen_attrs.insert(n).second) throw KbFormatError("duplicate attribute '" + a + "'");
    normalized_attributes_.push_back(std::move(n));
  }
  std::set<std::string> seen_names;
  for (const KbEntity& e : entities_) {
    const std::string n = text::normalize(e.name);
    if (n.empty()) throw KbFormatError("entity with empty name");
    if (!seen_names.insert(n).second) throw KbFormatError("duplicate entity '" + e.name + "'");
    normalized_names_.push_back(n);
    if (e.values.size() != attributes_.size()) {
      throw KbFormatError("entity '" + e.name + "' has " + std::to_string(e.values.size()) +
                          " values for " + std::to_string(attributes_.size()) + " attributes");
    }
  }
}

KnowledgeBase KnowledgeBase::from_json(const nlohmann::json& doc) {
  try {
    auto kind = parse_dataset_kind(doc.value("dataset_kind", "things"));
    if (!kind) throw KbFormatError("unknown dataset_kind");
    std::vector<std::string> attrs = doc.at("attributes").get<std::vector<std::string>>();

    std::vector<KbEntity> entities;
    for (const auto& je : doc.at("entities")) {
      KbEntity e;
      e.name = je.at("name").get<std::string>();
      e.category = je.value("category", "");
      e.values.assign(attrs.size(), Ternary::unknown);
      if (je.contains("attributes")) {
        for (const auto& [key, value] : je.at("attributes").items()) {
          auto it = std::find(attrs.begin(), attrs.end(), key);
          if (it == attrs.end()) {
            throw KbFormatError("entity '" + e.name + "' uses undeclared attribute '" + key + "'");
          }
          if (value.is_null()) continue;
          if (!value.is_boolean()) throw KbFormatError("attribute values must be true, false or null");
          e.values[static_cast<std::size_t>(it - attrs.begin())] = value.get<bool>() ? Ternary::yes : Ternary::no;
        }
      }
      entities.push_back(std::move(e));
    }
    return KnowledgeBase(*kind, std::move(attrs), std::move(entities));
  } catch (const nlohmann::json::exception& e) {
    throw KbFormatError(std::string("malformed knowledge base: ") + e.what());
  }
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open knowledge base " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw KbFormatError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json KnowledgeBase::to_json() const {
  nlohmann::json doc;
  doc["dataset_kind"] = std::string(eda::to_string(kind_));
  doc["attributes"] = attributes_;
  doc["entities"] = nlohmann::json::array();
  for (const KbEntity& e : entities_) {
    nlohmann::json attrs = nlohmann::json::object();
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      if (e.values[i] != Ternary::unknown) attrs[attributes_[i]] = e.values[i] == Ternary::yes;
    }
    doc["entities"].push_back({{"name", e.name}, {"category", e.category}, {"attributes", attrs}});
  }
  return doc;
}

const KbEntity* KnowledgeBase::find_entity(std::string_view name) const {
  const std::string n = text::normalize(name);
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    if (normalized_names_[i] == n) return &entities_[i];
  }
  return nullptr;
}

std::optional<std::size_t> KnowledgeBase::find_attribute(std::string_view name) const {
  const std::string n = text::normalize(name);
  for (std::size_t i = 0; i < normalized_attributes_.size(); ++i) {
    if (normalized_attributes_[i] == n) return i;
  }
  return std::nullopt;
}

Candidates all_candidates(const KnowledgeBase& kb) {
  Candidates c;
  c.reserve(kb.entities().size());
  for (const KbEntity& e : kb.entities()) c.push_back(&e);
  return c;
}

namespace {

// Body of "is it <body>?" after normalisation, or nullopt for other shapes.
std::optional<std::string> question_body(std::string_view question) {
  std::string q = text::normalize(question);
  constexpr std::string_view prefix = "is it ";
  if (q.size() <= prefix.size() || q.compare(0, prefix.size(), prefix) != 0 || q.back() != '?') {
    return std::nullopt;
  }
  q.pop_back();
  return std::string(text::trim(std::string_view(q).substr(prefix.size())));
}

std::optional<std::string_view> strip_article(std::string_view body) {
  for (std::string_view article : {"a ", "an "}) {
    if (body.size() > article.size() && body.substr(0, article.size()) == article) {
      return body.substr(article.size());
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> parse_attribute_question(const KnowledgeBase& kb, std::string_view question) {
  auto body = question_body(question);
  if (!body) return std::nullopt;
  if (auto idx = kb.find_attribute(*body)) return idx;
  if (auto rest = strip_article(*body)) return kb.find_attribute(*rest);
  return std::nullopt;
}

const KbEntity* parse_guess(const KnowledgeBase& kb, std::string_view question) {
  auto body = question_body(question);
  if (!body) return nullptr;
  if (auto rest = strip_article(*body)) return kb.find_entity(*rest);
  return nullptr;
}

std::string attribute_question(std::string_view attribute) { return "Is it " + std::string(attribute) + "?"; }

std::string guess_question(std::string_view name) { return "Is it a " + std::string(name) + "?"; }

Answer mock_judge(const KnowledgeBase& kb, const KbEntity& entity, std::string_view question) {
  if (detect_bingo(question, entity.name)) return Answer::bingo;
  if (auto idx = parse_attribute_question(kb, question)) {
    switch (entity.values[*idx]) {
      case Ternary::yes: return Answer::yes;
      case Ternary::no: return Answer::no;
      case Ternary::unknown: break;
    }
  } else if (parse_guess(kb, question)) {
    return Answer::no;  // names some other KB entity
  }
  return uncertain_answer(kb.dataset_kind());
}

Candidates filter_candidates(const Candidates& candidates, std::size_t attribute, Answer answer) {
  Candidates out;
  for (const KbEntity* e : candidates) {
    const Ternary v = e->values.at(attribute);
    bool keep = false;
    switch (answer) {
      case Answer::yes: keep = v != Ternary::no; break;
      case Answer::no: keep = v != Ternary::yes; break;
      case Answer::maybe:
      case Answer::dunno: keep = v == Ternary::unknown; break;
      case Answer::bingo: throw std::invalid_argument("filter_candidates: Bingo is not an attribute answer");
    }
    if (keep) out.push_back(e);
  }
  return out;
}

Move select_question(const Candidates& candidates, const std::vector<bool>& asked) {
  if (candidates.empty()) throw EmptyCandidateSet("select_question: no candidates");
  if (candidates.size() > 1) {
    const std::size_t n_attrs = candidates.front()->values.size();
    std::optional<std::size_t> best;
    long best_imbalance = 0;
    for (std::size_t a = 0; a < n_attrs; ++a) {
      if (a < asked.size() && asked[a]) continue;
      long t = 0, f = 0;
      for (const KbEntity* e : candidates) {
        if (e->values[a] == Ternary::yes) ++t;
        if (e->values[a] == Ternary::no) ++f;
      }
      if (t == 0 || f == 0) continue;
      const long imbalance = std::labs(t - f);
      if (!best || imbalance < best_imbalance) {
        best = a;
        best_imbalance = imbalance;
      }
    }
    if (best) return Ask{*best};
  }
  return Guess{candidates.front()};
}

CandidateState replay_history(const KnowledgeBase& kb, std::span<const Turn> history) {
  CandidateState s{all_candidates(kb), std::vector<bool>(kb.attribute_names().size(), false)};
  for (const Turn& t : history) {
    if (t.answer == Answer::bingo) continue;
    if (auto idx = parse_attribute_question(kb, t.question)) {
      s.candidates = filter_candidates(s.candidates, *idx, t.answer);
      s.asked[*idx] = true;
    } else if (const KbEntity* guessed = parse_guess(kb, t.question); guessed) {
      // Not Bingo, so the guess was wrong whatever the judge said.
      std::erase(s.candidates, guessed);
    }
  }
  return s;
}

std::string oracle_guesser_next(std::span<const Turn> history, const KnowledgeBase& kb) {
  CandidateState s = replay_history(kb, history);
  if (s.candidates.empty()) throw EmptyCandidateSet("dialogue history is inconsistent with every KB entity");
  const Move m = select_question(s.candidates, s.asked);
  if (const Ask* ask = std::get_if<Ask>(&m)) return attribute_question(kb.attribute_names()[ask->attribute]);
  return guess_question(std::get<Guess>(m).entity->name);
}

MockJudge::MockJudge(std::shared_ptr<const KnowledgeBase> kb) : kb_(std::move(kb)) {}

Answer MockJudge::answer(std::string_view entity, std::string_view question) {
  if (const KbEntity* e = kb_->find_entity(entity)) return mock_judge(*kb_, *e, question);
  if (detect_bingo(question, entity)) return Answer::bingo;
  return uncertain_answer(kb_->dataset_kind());
}

OracleGuesser::OracleGuesser(std::shared_ptr<const KnowledgeBase> kb) : kb_(std::move(kb)) {}

std::string OracleGuesser::next_question(std::span<const Turn> history) {
  try {
    return oracle_guesser_next(history, *kb_);
  } catch (const EmptyCandidateSet& e) {
    throw AgentError(e.what());
  }
}

std::optional<std::vector<std::string>> OracleGuesser::probe_top_k(std::span<const Turn> history, int k) {
  CandidateState s = replay_history(*kb_, history);
  std::vector<std::string> out;
  for (const KbEntity* e : s.candidates) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(e->name);
  }
  return out;
}

RandomGuesser::RandomGuesser(std::shared_ptr<const KnowledgeBase> kb, std::uint64_t seed, double guess_probability)
    : kb_(std::move(kb)), seed_(seed), guess_probability_(guess_probability) {}

std::string RandomGuesser::next_question(std::span<const Turn> history) {
  std::mt19937_64 rng(rnd::combine(seed_, history.size()));
  CandidateState s = replay_history(*kb_, history);
  if (s.candidates.empty()) s.candidates = all_candidates(*kb_);

  std::vector<std::size_t> open;
  for (std::size_t a = 0; a < s.asked.size(); ++a) {
    if (!s.asked[a]) open.push_back(a);
  }
  if (open.empty() || s.candidates.size() == 1 || rnd::uniform01(rng) < guess_probability_) {
    return guess_question(s.candidates[rnd::uniform_index(rng, s.candidates.size())]->name);
  }
  return attribute_question(kb_->attribute_names()[open[rnd::uniform_index(rng, open.size())]]);
}

}  // namespace eda
