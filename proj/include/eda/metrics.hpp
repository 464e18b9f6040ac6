#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace eda {

struct Transcript;

/// Game score: 1 - 0.02 * max(num_turns - 5, 0) for a win, 0 for a loss.
/// Throws std::invalid_argument when num_turns < 1.
double game_score(bool won, int num_turns);

struct RunMetrics {
  double avg_turns = 0;
  double success_rate = 0;
  double avg_yes = 0;
  double avg_score = 0;
  int n_games = 0;
};

class EmptyInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arithmetic means over one run. Aborted transcripts are rejected; filter them first.
RunMetrics aggregate_run(std::span<const Transcript> transcripts);

struct MeanStd {
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n - 1), 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct RunReport {
  MeanStd turns;
  MeanStd success;
  MeanStd yes;
  MeanStd score;
  int repetitions = 0;
  int n_games = 0;
  int aborted = 0;
  std::map<std::string, std::vector<double>> per_item;
};

RunReport aggregate_repetitions(std::span<const RunMetrics> runs);

/// Full report from transcripts: groups by repetition index, excludes aborted
/// games (counted in RunReport::aborted) and fills the per-item score lists.
RunReport build_report(std::span<const Transcript> transcripts);

struct WilsonInterval {
  double lo = 0;
  double hi = 1;
};

/// Wilson score interval for a binomial proportion, clamped to [0, 1]. n == 0 gives (0, 1).
WilsonInterval wilson_interval(int successes, int n, double z = 1.96);

struct ItemScore {
  std::string entity;
  std::vector<double> scores;
  double mean = 0;
};

/// Per-entity scores, hardest first (ascending mean, then entity name).
std::vector<ItemScore> breakdown_by_item(std::span<const Transcript> transcripts);

nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const std::vector<ItemScore>& items);

// Plain-text table with #Turns / Success / #Yes / Score columns (mean±std).
std::string format_report_table(const RunReport& report, const std::string& label);

std::string items_to_csv(const std::vector<ItemScore>& items);

}  // namespace eda
