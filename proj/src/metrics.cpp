#include "eda/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "eda/game.hpp"

namespace eda {

double game_score(bool won, int num_turns) {
  if (num_turns < 1) throw std::invalid_argument("num_turns must be >= 1");
  if (!won) return 0.0;
  return 1.0 - 0.02 * std::max(num_turns - 5, 0);
}

RunMetrics aggregate_run(std::span<const Transcript> transcripts) {
  if (transcripts.empty()) throw EmptyInputError("aggregate_run: no transcripts");
  std::vector<double> turns, yes, score;
  int wins = 0;
  for (const Transcript& t : transcripts) {
    if (t.aborted) throw std::invalid_argument("aggregate_run: aborted transcript in input");
    turns.push_back(t.num_turns);
    yes.push_back(t.num_yes);
    score.push_back(t.score);
    wins += t.won ? 1 : 0;
  }
  RunMetrics m;
  m.n_games = static_cast<int>(transcripts.size());
  m.avg_turns = mean_std(turns).mean;
  m.avg_yes = mean_std(yes).mean;
  m.avg_score = mean_std(score).mean;
  m.success_rate = static_cast<double>(wins) / m.n_games;
  return m;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  // Summing in sorted order makes the result independent of input order.
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0;
  for (double x : v) sum += x;
  MeanStd out;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

RunReport aggregate_repetitions(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw EmptyInputError("aggregate_repetitions: no runs");
  std::vector<double> turns, success, yes, score;
  RunReport r;
  for (const RunMetrics& m : runs) {
    turns.push_back(m.avg_turns);
    success.push_back(m.success_rate);
    yes.push_back(m.avg_yes);
    score.push_back(m.avg_score);
    r.n_games += m.n_games;
  }
  r.turns = mean_std(turns);
  r.success = mean_std(success);
  r.yes = mean_std(yes);
  r.score = mean_std(score);
  r.repetitions = static_cast<int>(runs.size());
  return r;
}

RunReport build_report(std::span<const Transcript> transcripts) {
  std::map<int, std::vector<Transcript>> by_rep;
  int aborted = 0;
  for (const Transcript& t : transcripts) {
    if (t.aborted) {
      ++aborted;
      continue;
    }
    by_rep[t.repetition].push_back(t);
  }

  std::vector<RunMetrics> runs;
  for (auto& [rep, group] : by_rep) runs.push_back(aggregate_run(group));
  RunReport r = runs.empty() ? RunReport{} : aggregate_repetitions(runs);
  r.aborted = aborted;

  // Repetition order, sorted within a repetition, so input order never matters.
  for (const auto& [rep, group] : by_rep) {
    std::map<std::string, std::vector<double>> scores;
    for (const Transcript& t : group) scores[t.entity].push_back(t.score);
    for (auto& [entity, v] : scores) {
      std::sort(v.begin(), v.end());
      auto& dst = r.per_item[entity];
      dst.insert(dst.end(), v.begin(), v.end());
    }
  }
  return r;
}

WilsonInterval wilson_interval(int successes, int n, double z) {
  if (n < 0 || successes < 0 || successes > n) {
    throw std::invalid_argument("wilson_interval: need 0 <= successes <= n");
  }
  if (!(z > 0)) throw std::invalid_argument("wilson_interval: z must be > 0");
  if (n == 0) return {0.0, 1.0};

  const double nn = n;
  const double p = successes / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2 * nn)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  // The exact interval always contains p; clamping there only absorbs rounding (k = 0 or k = n).
  return {std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
}

std::vector<ItemScore> breakdown_by_item(std::span<const Transcript> transcripts) {
  std::map<std::string, std::vector<double>> grouped;
  for (const Transcript& t : transcripts) {
    if (!t.aborted) grouped[t.entity].push_back(t.score);
  }
  std::vector<ItemScore> items;
  for (auto& [entity, scores] : grouped) {
    std::sort(scores.begin(), scores.end());
    ItemScore item{entity, scores, mean_std(scores).mean};
    items.push_back(std::move(item));
  }
  std::stable_sort(items.begin(), items.end(), [](const ItemScore& a, const ItemScore& b) {
    if (a.mean != b.mean) return a.mean < b.mean;
    return a.entity < b.entity;
  });
  return items;
}

namespace {

nlohmann::json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.stddev}}; }

std::string pm(const MeanStd& m, int precision) {
  return fmt::format("{:.{}f}±{:.{}f}", m.mean, precision, m.stddev, precision);
}

}  // namespace

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json j;
  j["repetitions"] = report.repetitions;
  j["n_games"] = report.n_games;
  j["aborted"] = report.aborted;
  j["std_estimator"] = "sample standard deviation across repetitions";
  j["turns"] = to_json(report.turns);
  j["success"] = to_json(report.success);
  j["yes"] = to_json(report.yes);
  j["score"] = to_json(report.score);
  j["per_item"] = report.per_item;
  return j;
}

nlohmann::json to_json(const std::vector<ItemScore>& items) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ItemScore& i : items) {
    arr.push_back({{"entity", i.entity}, {"scores", i.scores}, {"mean", i.mean}});
  }
  return arr;
}

std::string format_report_table(const RunReport& report, const std::string& label) {
  const std::string name = label.empty() ? "run" : label;
  const std::size_t w = std::max<std::size_t>(name.size(), 5);
  std::ostringstream out;
  out << fmt::format("{:<{}}  {:>13}  {:>13}  {:>13}  {:>13}\n", "", w, "#Turns", "Success", "#Yes", "Score");
  out << fmt::format("{:<{}}  {:>13}  {:>13}  {:>13}  {:>13}\n", name, w, pm(report.turns, 1),
                     pm(report.success, 2), pm(report.yes, 1), pm(report.score, 2));
  out << fmt::format("({} repetition{}, {} games, {} aborted; ± is sample std across repetitions)\n",
                     report.repetitions, report.repetitions == 1 ? "" : "s", report.n_games, report.aborted);
  return out.str();
}

std::string items_to_csv(const std::vector<ItemScore>& items) {
  std::ostringstream out;
  out << "entity,mean_score,n\n";
  for (const ItemScore& i : items) {
    std::string e = i.entity;
    if (e.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : e) {
        if (c == '"') q += '"';
        q += c;
      }
      e = q + "\"";
    }
    out << fmt::format("{},{:.6f},{}\n", e, i.mean, i.scores.size());
  }
  return out.str();
}

}  // namespace eda
