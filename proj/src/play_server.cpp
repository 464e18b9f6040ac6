#include "eda/play_server.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "eda/prompts.hpp"
#include "eda/random.hpp"
#include "eda/text.hpp"
#include "eda/transcript_io.hpp"

namespace eda {

std::string next_entity(const PlayCount& counts, const std::vector<std::string>& dataset, std::mt19937_64& rng) {
  if (dataset.empty()) throw std::invalid_argument("next_entity: empty dataset");
  auto count_of = [&](const std::string& e) {
    auto it = counts.find(e);
    return it == counts.end() ? 0 : it->second;
  };
  int lowest = count_of(dataset.front());
  for (const std::string& e : dataset) lowest = std::min(lowest, count_of(e));
  std::vector<const std::string*> pool;
  for (const std::string& e : dataset) {
    if (count_of(e) == lowest) pool.push_back(&e);
  }
  return *pool[rnd::uniform_index(rng, pool.size())];
}

std::vector<LeaderboardRow> rank_leaderboard(std::vector<LeaderboardRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    if (a.mean_score != b.mean_score) return a.mean_score > b.mean_score;
    if (a.wilson.lo != b.wilson.lo) return a.wilson.lo > b.wilson.lo;
    return a.player_id < b.player_id;
  });
  return rows;
}

namespace {

constexpr std::size_t kMaxQuestionLength = 1000;

ApiResponse error(int status, std::string message) { return {status, {{"error", std::move(message)}}}; }

long long to_millis(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

std::chrono::system_clock::time_point from_millis(long long ms) {
  return std::chrono::system_clock::time_point(std::chrono::milliseconds(ms));
}

// The human's utterance, fed through the shared engine.
class HumanGuesser final : public Guesser {
 public:
  explicit HumanGuesser(std::string q) : q_(std::move(q)) {}
  std::string next_question(std::span<const Turn>) override { return q_; }

 private:
  std::string q_;
};

}  // namespace

PlayService::PlayService(ServerConfig config) : config_(std::move(config)) {
  if (config_.datasets.empty()) throw std::invalid_argument("play server needs at least one dataset");
  for (const auto& [kind, ds] : config_.datasets) {
    if (ds.entities.empty()) throw std::invalid_argument("dataset " + std::string(to_string(kind)) + " is empty");
    if (!ds.factory) throw std::invalid_argument("dataset " + std::string(to_string(kind)) + " has no agent factory");
    ds.factory->check_judge(config_.judge_spec);
    if (config_.reference_guesser_spec) ds.factory->check_guesser(*config_.reference_guesser_spec);
  }
  if (config_.max_turns < 2) throw std::invalid_argument("max_turns must be >= 2");
  rng_.seed(config_.seed ? *config_.seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}());
  if (config_.state_dir) {
    std::filesystem::create_directories(*config_.state_dir);
    load_state();
  }
}

std::string PlayService::new_session_id() {
  std::random_device rd;
  std::string id;
  for (int i = 0; i < 4; ++i) id += fmt::format("{:08x}", static_cast<std::uint32_t>(rd()));
  return id;
}

GameConfig PlayService::game_config(DatasetKind kind) const {
  GameConfig cfg;
  cfg.max_turns = config_.max_turns;
  cfg.dataset_kind = kind;
  cfg.retry = config_.judge_retry;
  return cfg;
}

Transcript PlayService::make_transcript(const Session& s) const {
  Transcript t;
  t.entity = s.state.entity;
  t.dataset_kind = s.kind;
  t.turns = s.state.turns;
  t.finished = s.state.finished;
  t.won = s.state.won;
  t.guesser_spec = "human:" + s.player_id;
  t.judge_spec = config_.judge_spec;
  t.max_turns = config_.max_turns;
  t.aborted = s.expired;
  if (s.expired) t.abort_reason = "session expired";
  finalize_metrics(t);
  return t;
}

nlohmann::json PlayService::session_view(const Session& s) const {
  nlohmann::json turns = nlohmann::json::array();
  for (const Turn& t : s.state.turns) {
    turns.push_back({{"i", t.index}, {"question", t.question}, {"answer", t.judge_text()}});
  }
  const bool over = s.state.finished || s.expired;
  nlohmann::json j = {{"session_id", s.id},
                      {"player_id", s.player_id},
                      {"dataset_kind", std::string(to_string(s.kind))},
                      {"max_turns", config_.max_turns},
                      {"turns", turns},
                      {"turns_remaining", config_.max_turns - static_cast<int>(s.state.turns.size())},
                      {"finished", over},
                      {"won", s.state.won},
                      {"expired", s.expired},
                      {"hint_enabled", s.hint_enabled && config_.hint_enabled}};
  if (over) {
    j["entity"] = s.state.entity;
    j["score"] = make_transcript(s).score;
  }
  return j;
}

ApiResponse PlayService::create_session(const nlohmann::json& request) {
  if (!request.is_object()) return error(400, "request body must be a JSON object");
  const std::string player = text::single_line(request.value("player_id", ""));
  if (player.empty()) return error(400, "player_id is required");
  const auto kind = parse_dataset_kind(request.value("dataset_kind", ""));
  if (!kind) return error(400, "unknown dataset_kind");
  auto ds = config_.datasets.find(*kind);
  if (ds == config_.datasets.end()) return error(400, "dataset_kind not served");
  const bool hint = request.value("hint", true);

  std::lock_guard lock(mu_);
  const auto now = config_.clock();
  expire_locked(now);
  Session s;
  s.id = new_session_id();
  s.player_id = player;
  s.kind = *kind;
  s.state.entity = next_entity(counts_[*kind], ds->second.entities, rng_);
  s.created = s.updated = now;
  s.hint_enabled = hint;
  const std::string id = s.id;
  sessions_.emplace(id, std::move(s));
  persist_locked();
  return {200,
          {{"session_id", id},
           {"instructions", guesser_instructions(*kind)},
           {"max_turns", config_.max_turns},
           {"dataset_kind", std::string(to_string(*kind))},
           {"hint_enabled", hint && config_.hint_enabled}}};
}

ApiResponse PlayService::post_question(const std::string& session_id, const nlohmann::json& request) {
  if (!request.is_object() || !request.contains("question") || !request["question"].is_string()) {
    return error(422, "question must be a string");
  }
  const std::string question = text::single_line(request["question"].get<std::string>());
  if (question.empty()) return error(422, "question is empty");
  if (question.size() > kMaxQuestionLength) return error(422, "question is too long");

  GameState state;
  DatasetKind kind;
  {
    std::lock_guard lock(mu_);
    expire_locked(config_.clock());
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return error(404, "unknown session");
    Session& s = it->second;
    if (s.expired) return error(409, "session expired");
    if (s.state.finished) return error(409, "game already finished");
    if (s.busy) return error(409, "a question is already in flight for this session");
    s.busy = true;
    state = s.state;
    kind = s.kind;
  }

  // The judge may be slow; run it without holding the service lock.
  std::optional<Turn> turn;
  std::string failure;
  try {
    auto judge = config_.datasets.at(kind).factory->make_judge(config_.judge_spec, game_config(kind).judge_temperature);
    HumanGuesser guesser(question);
    turn = run_turn(state, guesser, *judge, game_config(kind));
  } catch (const std::exception& e) {
    failure = e.what();
  }

  std::lock_guard lock(mu_);
  Session& s = sessions_.at(session_id);
  s.busy = false;
  if (!turn) {
    spdlog::error("judge failed for session {}: {}", session_id, failure);
    return error(502, "judge unavailable, please retry");
  }
  s.state = std::move(state);
  s.updated = config_.clock();
  nlohmann::json body = {{"answer", turn->judge_text()},
                         {"turn_index", turn->index},
                         {"finished", s.state.finished},
                         {"won", s.state.won},
                         {"turns_remaining", config_.max_turns - static_cast<int>(s.state.turns.size())}};
  if (s.state.finished) {
    finish_locked(s);
    body["score"] = results_.back().score;
    body["entity"] = s.state.entity;
  }
  persist_locked();
  return {200, body};
}

void PlayService::finish_locked(Session& s) {
  Result r;
  r.transcript_id = s.id;
  r.player_id = s.player_id;
  r.kind = s.kind;
  r.transcript = make_transcript(s);
  r.won = r.transcript.won;
  r.score = r.transcript.score;
  r.qualified = config_.auto_qualify;
  if (!s.expired) ++counts_[s.kind][s.state.entity];
  if (config_.state_dir) {
    nlohmann::json j = to_json(r.transcript);
    j["transcript_id"] = r.transcript_id;
    j["player_id"] = r.player_id;
    JsonlWriter(*config_.state_dir / "transcripts.jsonl").write(j);
  }
  if (!s.expired) results_.push_back(std::move(r));
}

ApiResponse PlayService::get_session(const std::string& session_id) {
  std::lock_guard lock(mu_);
  expire_locked(config_.clock());
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return error(404, "unknown session");
  return {200, session_view(it->second)};
}

ApiResponse PlayService::hint(const std::string& session_id) {
  std::vector<Turn> history;
  DatasetKind kind;
  std::string entity;
  std::uint64_t seed;
  {
    std::lock_guard lock(mu_);
    expire_locked(config_.clock());
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return error(404, "unknown session");
    const Session& s = it->second;
    if (!config_.hint_enabled || !s.hint_enabled) return error(409, "hints are disabled");
    if (s.state.turns.empty()) return error(409, "no completed turn yet");
    if (!config_.reference_guesser_spec) return error(503, "no reference guesser configured");
    history.assign(s.state.turns.begin(), s.state.turns.end() - 1);
    kind = s.kind;
    entity = s.state.entity;
    seed = rnd::fnv1a(s.id);
    if (s.state.finished || s.expired) entity.clear();  // nothing left to hide
  }
  try {
    auto guesser = config_.datasets.at(kind).factory->make_guesser(*config_.reference_guesser_spec, seed, 0.0);
    std::string q = text::single_line(guesser->next_question(history));
    const int for_turn = static_cast<int>(history.size()) + 1;
    // A reference suggestion that names the hidden entity would give the game away.
    if (!entity.empty() && detect_bingo(q, entity)) {
      return {200, {{"suggested_question", nullptr}, {"withheld", true}, {"for_turn", for_turn}}};
    }
    return {200, {{"suggested_question", q}, {"withheld", false}, {"for_turn", for_turn}}};
  } catch (const std::exception& e) {
    spdlog::error("reference guesser failed: {}", e.what());
    return error(502, "reference guesser unavailable");
  }
}

ApiResponse PlayService::leaderboard() {
  std::lock_guard lock(mu_);
  struct Acc {
    int games = 0;
    int wins = 0;
    double score = 0;
  };
  std::map<std::string, Acc> acc;
  for (const Result& r : results_) {
    if (!r.qualified) continue;
    Acc& a = acc[r.player_id];
    ++a.games;
    a.wins += r.won ? 1 : 0;
    a.score += r.score;
  }
  std::vector<LeaderboardRow> rows;
  for (const auto& [player, a] : acc) {
    rows.push_back({player, false, a.games, a.wins, static_cast<double>(a.wins) / a.games,
                    wilson_interval(a.wins, a.games), a.score / a.games});
  }
  for (const BenchmarkRow& b : config_.benchmarks) {
    rows.push_back({b.name, true, b.games, b.wins, b.games ? static_cast<double>(b.wins) / b.games : 0.0,
                    wilson_interval(b.wins, b.games), b.mean_score});
  }
  nlohmann::json out = nlohmann::json::array();
  for (const LeaderboardRow& r : rank_leaderboard(std::move(rows))) {
    out.push_back({{"player_id", r.player_id},
                   {"benchmark", r.benchmark},
                   {"games", r.games},
                   {"wins", r.wins},
                   {"success_rate", r.success_rate},
                   {"wilson_lo", r.wilson.lo},
                   {"wilson_hi", r.wilson.hi},
                   {"mean_score", r.mean_score}});
  }
  return {200, {{"rows", out}}};
}

ApiResponse PlayService::qualify(const std::string& transcript_id, const std::string& admin_token) {
  if (config_.admin_token.empty()) return error(503, "admin endpoint disabled");
  if (admin_token != config_.admin_token) return error(403, "bad admin token");
  std::lock_guard lock(mu_);
  for (Result& r : results_) {
    if (r.transcript_id == transcript_id) {
      r.qualified = true;
      persist_locked();
      return {200, {{"transcript_id", transcript_id}, {"qualified", true}}};
    }
  }
  return error(404, "unknown transcript");
}

int PlayService::expire_idle() {
  std::lock_guard lock(mu_);
  int before = 0;
  for (const auto& [id, s] : sessions_) before += s.expired ? 1 : 0;
  expire_locked(config_.clock());
  int after = 0;
  for (const auto& [id, s] : sessions_) after += s.expired ? 1 : 0;
  if (after != before) persist_locked();
  return after - before;
}

void PlayService::expire_locked(std::chrono::system_clock::time_point now) {
  for (auto& [id, s] : sessions_) {
    if (s.expired || s.state.finished || s.busy) continue;
    if (now - s.updated > config_.idle_timeout) {
      s.expired = true;
      finish_locked(s);
    }
  }
}

PlayCount PlayService::play_counts(DatasetKind kind) const {
  std::lock_guard lock(mu_);
  auto it = counts_.find(kind);
  return it == counts_.end() ? PlayCount{} : it->second;
}

std::vector<Transcript> PlayService::finished_transcripts() const {
  std::lock_guard lock(mu_);
  std::vector<Transcript> out;
  for (const Result& r : results_) out.push_back(r.transcript);
  return out;
}

void PlayService::persist_locked() const {
  if (!config_.state_dir) return;
  nlohmann::json doc;
  doc["schema_version"] = 1;
  nlohmann::json sessions = nlohmann::json::object();
  for (const auto& [id, s] : sessions_) {
    nlohmann::json turns = nlohmann::json::array();
    for (const Turn& t : s.state.turns) {
      turns.push_back({{"i", t.index},
                       {"question", t.question},
                       {"answer", std::string(answer_label(t.answer))},
                       {"forced", t.forced_guess_suffix_applied}});
    }
    sessions[id] = {{"player_id", s.player_id},
                    {"dataset_kind", std::string(to_string(s.kind))},
                    {"entity", s.state.entity},
                    {"turns", turns},
                    {"finished", s.state.finished},
                    {"won", s.state.won},
                    {"created_ms", to_millis(s.created)},
                    {"updated_ms", to_millis(s.updated)},
                    {"hint_enabled", s.hint_enabled},
                    {"expired", s.expired}};
  }
  doc["sessions"] = sessions;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [kind, c] : counts_) counts[std::string(to_string(kind))] = c;
  doc["play_counts"] = counts;
  nlohmann::json qualified = nlohmann::json::array();
  for (const Result& r : results_) {
    if (r.qualified) qualified.push_back(r.transcript_id);
  }
  doc["qualified"] = qualified;

  const auto path = *config_.state_dir / "state.json";
  const auto tmp = *config_.state_dir / "state.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(1);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void PlayService::load_state() {
  const auto dir = *config_.state_dir;
  std::set<std::string> qualified;
  if (std::filesystem::exists(dir / "state.json")) {
    std::ifstream in(dir / "state.json");
    const nlohmann::json doc = nlohmann::json::parse(in);
    for (const auto& [id, js] : doc.at("sessions").items()) {
      Session s;
      s.id = id;
      s.player_id = js.at("player_id").get<std::string>();
      s.kind = parse_dataset_kind(js.at("dataset_kind").get<std::string>()).value();
      s.state.entity = js.at("entity").get<std::string>();
      for (const auto& jt : js.at("turns")) {
        s.state.turns.push_back({jt.at("i").get<int>(), jt.at("question").get<std::string>(),
                                 parse_answer_label(jt.at("answer").get<std::string>()).value(),
                                 jt.at("forced").get<bool>()});
      }
      s.state.finished = js.at("finished").get<bool>();
      s.state.won = js.at("won").get<bool>();
      s.created = from_millis(js.at("created_ms").get<long long>());
      s.updated = from_millis(js.at("updated_ms").get<long long>());
      s.hint_enabled = js.at("hint_enabled").get<bool>();
      s.expired = js.at("expired").get<bool>();
      sessions_.emplace(id, std::move(s));
    }
    for (const auto& [kind, c] : doc.at("play_counts").items()) {
      counts_[parse_dataset_kind(kind).value()] = c.get<PlayCount>();
    }
    qualified = doc.at("qualified").get<std::set<std::string>>();
  }
  if (std::filesystem::exists(dir / "transcripts.jsonl")) {
    std::ifstream in(dir / "transcripts.jsonl");
    for (std::string line; std::getline(in, line);) {
      const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("transcript_id")) continue;
      Result r;
      r.transcript = transcript_from_json(j);
      if (r.transcript.aborted) continue;
      r.transcript_id = j.at("transcript_id").get<std::string>();
      r.player_id = j.value("player_id", "");
      r.kind = r.transcript.dataset_kind;
      r.won = r.transcript.won;
      r.score = r.transcript.score;
      r.qualified = qualified.count(r.transcript_id) > 0;
      results_.push_back(std::move(r));
    }
  }
  spdlog::info("loaded {} sessions and {} finished games from {}", sessions_.size(), results_.size(), dir.string());
}

void mount_play_api(httplib::Server& server, PlayService& service,
                    const std::optional<std::filesystem::path>& static_dir) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse_body = [](const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(req.body, nullptr, false);
  };

  server.Post("/api/sessions", [=, &service](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (body.is_discarded()) return reply(res, error(400, "invalid JSON"));
    reply(res, service.create_session(body));
  });
  server.Post(R"(/api/sessions/([0-9a-f]+)/question)", [=, &service](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (body.is_discarded()) return reply(res, error(422, "invalid JSON"));
    reply(res, service.post_question(req.matches[1], body));
  });
  server.Get(R"(/api/sessions/([0-9a-f]+))", [=, &service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_session(req.matches[1]));
  });
  server.Get(R"(/api/sessions/([0-9a-f]+)/hint)", [=, &service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.hint(req.matches[1]));
  });
  server.Get("/api/leaderboard", [=, &service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.leaderboard());
  });
  server.Post(R"(/api/admin/qualify/([0-9a-f]+))", [=, &service](const httplib::Request& req, httplib::Response& res) {
    std::string token = req.get_header_value("X-Admin-Token");
    const std::string auth = req.get_header_value("Authorization");
    if (token.empty() && auth.rfind("Bearer ", 0) == 0) token = auth.substr(7);
    reply(res, service.qualify(req.matches[1], token));
  });
  if (static_dir && !server.set_mount_point("/", static_dir->string())) {
    throw std::invalid_argument("static directory " + static_dir->string() + " does not exist");
  }
}

}  // namespace eda
