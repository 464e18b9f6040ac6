#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eda/game.hpp"
#include "eda/metrics.hpp"
#include "eda/runner.hpp"

namespace httplib {
class Server;
}

namespace eda {

using PlayCount = std::map<std::string, int>;

// Uniform choice among the entities with the fewest plays (missing counts are 0).
// Throws std::invalid_argument on an empty dataset.
std::string next_entity(const PlayCount& counts, const std::vector<std::string>& dataset, std::mt19937_64& rng);

struct BenchmarkRow {
  std::string name;
  int games = 0;
  int wins = 0;
  double mean_score = 0;
};

struct LeaderboardRow {
  std::string player_id;
  bool benchmark = false;
  int games = 0;
  int wins = 0;
  double success_rate = 0;
  WilsonInterval wilson;
  double mean_score = 0;
};

// Ranked by mean_score descending, then wilson_lo descending, then name.
std::vector<LeaderboardRow> rank_leaderboard(std::vector<LeaderboardRow> rows);

struct ServedDataset {
  std::vector<std::string> entities;
  std::shared_ptr<AgentFactory> factory;  // builds the judge and the reference guesser
};

struct ServerConfig {
  std::map<DatasetKind, ServedDataset> datasets;
  std::string judge_spec = "mock";
  std::optional<std::string> reference_guesser_spec;
  bool hint_enabled = true;
  int max_turns = kDefaultMaxTurns;
  std::chrono::seconds idle_timeout{30 * 60};
  std::optional<std::filesystem::path> state_dir;  // state.json + transcripts.jsonl
  bool auto_qualify = false;
  std::vector<BenchmarkRow> benchmarks;
  std::string admin_token;  // empty disables the admin endpoint
  std::optional<std::uint64_t> seed;  // entity assignment RNG; random_device when unset
  RetryPolicy judge_retry;
  std::function<std::chrono::system_clock::time_point()> clock = [] { return std::chrono::system_clock::now(); };
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent game service. Every method is thread-safe.
class PlayService {
 public:
  explicit PlayService(ServerConfig config);

  ApiResponse create_session(const nlohmann::json& request);
  ApiResponse post_question(const std::string& session_id, const nlohmann::json& request);
  ApiResponse get_session(const std::string& session_id);
  ApiResponse hint(const std::string& session_id);
  ApiResponse leaderboard();
  ApiResponse qualify(const std::string& transcript_id, const std::string& admin_token);

  // Aborts sessions idle past the timeout; returns how many were expired.
  int expire_idle();

  PlayCount play_counts(DatasetKind kind) const;
  std::vector<Transcript> finished_transcripts() const;

 private:
  struct Session {
    std::string id;
    std::string player_id;
    DatasetKind kind = DatasetKind::things;
    GameState state;
    std::chrono::system_clock::time_point created;
    std::chrono::system_clock::time_point updated;
    bool hint_enabled = true;
    bool busy = false;
    bool expired = false;
  };
  struct Result {
    std::string transcript_id;
    std::string player_id;
    DatasetKind kind = DatasetKind::things;
    bool won = false;
    double score = 0;
    bool qualified = false;
    Transcript transcript;
  };

  std::string new_session_id();
  GameConfig game_config(DatasetKind kind) const;
  Transcript make_transcript(const Session& s) const;
  nlohmann::json session_view(const Session& s) const;
  void expire_locked(std::chrono::system_clock::time_point now);
  void finish_locked(Session& s);
  void persist_locked() const;
  void load_state();

  ServerConfig config_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, Session> sessions_;
  std::map<DatasetKind, PlayCount> counts_;
  std::vector<Result> results_;
};

// Binds the HTTP+JSON API (and optional static files) onto a server.
void mount_play_api(httplib::Server& server, PlayService& service,
                    const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace eda
