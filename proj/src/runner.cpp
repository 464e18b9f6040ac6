#include "eda/runner.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "eda/datasets.hpp"
#include "eda/random.hpp"
#include "eda/text.hpp"
#include "eda/transcript_io.hpp"

namespace eda {

AgentSpec AgentSpec::parse(std::string_view spec) {
  AgentSpec s;
  const auto colon = spec.find(':');
  s.kind = std::string(spec.substr(0, colon));
  if (colon != std::string_view::npos) s.arg = std::string(spec.substr(colon + 1));
  if (s.kind == "llm") {
    const auto at = s.arg.find('@');
    if (at != std::string::npos) {
      s.url = s.arg.substr(at + 1);
      s.arg.resize(at);
    }
  }
  const bool needs_arg = s.kind == "scripted" || s.kind == "llm";
  const bool known = needs_arg || s.kind == "mock" || s.kind == "oracle" || s.kind == "random" || s.kind == "human";
  if (!known) throw std::invalid_argument("unknown agent spec '" + std::string(spec) + "'");
  if (needs_arg && s.arg.empty()) throw std::invalid_argument("agent spec '" + std::string(spec) + "' needs an argument");
  if (!needs_arg && !s.arg.empty()) throw std::invalid_argument("agent spec '" + std::string(spec) + "' takes no argument");
  return s;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read script " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> load_guesser_script(const std::string& path) {
  std::vector<std::string> lines;
  for (const std::string& l : text::split_lines(read_file(path))) {
    if (!text::trim(l).empty()) lines.emplace_back(text::trim(l));
  }
  if (lines.empty()) throw std::invalid_argument("guesser script " + path + " is empty");
  return lines;
}

std::map<std::string, Answer> load_judge_script(const std::string& path) {
  std::map<std::string, Answer> out;
  for (const std::string& l : text::split_lines(read_file(path))) {
    if (text::trim(l).empty()) continue;
    const auto tab = l.rfind('\t');
    if (tab == std::string::npos) throw std::invalid_argument("judge script line without a tab: " + l);
    auto a = parse_answer_label(l.substr(tab + 1));
    if (!a) throw std::invalid_argument("judge script has unknown answer: " + l);
    out[text::normalize(l.substr(0, tab))] = *a;
  }
  return out;
}

}  // namespace

AgentFactory::AgentFactory(DatasetKind kind, std::shared_ptr<const KnowledgeBase> kb)
    : kind_(kind), kb_(std::move(kb)) {}

void AgentFactory::check_guesser(std::string_view spec) const {
  const AgentSpec s = AgentSpec::parse(spec);
  if (s.kind == "mock" || s.kind == "human") throw std::invalid_argument("'" + s.kind + "' is not a batch guesser");
  if ((s.kind == "oracle" || s.kind == "random") && !kb_) throw std::invalid_argument(s.kind + " guesser needs a KB");
  if (s.kind == "scripted") load_guesser_script(s.arg);
}

void AgentFactory::check_judge(std::string_view spec) const {
  const AgentSpec s = AgentSpec::parse(spec);
  if (s.kind == "oracle" || s.kind == "random" || s.kind == "human") {
    throw std::invalid_argument("'" + s.kind + "' is not a judge");
  }
  if (s.kind == "mock" && !kb_) throw std::invalid_argument("mock judge needs a KB");
  if (s.kind == "scripted") load_judge_script(s.arg);
}

std::shared_ptr<ChatTransport> AgentFactory::transport_for(const std::string& url) {
  if (override_) return override_;
  std::lock_guard lock(mu_);
  auto& t = transports_[url];
  if (!t) {
    HttpTransportOptions opts = HttpTransportOptions::from_env();
    if (!url.empty()) opts.base_url = url;
    t = std::make_shared<HttpChatTransport>(opts);
  }
  return t;
}

std::unique_ptr<Guesser> AgentFactory::make_guesser(std::string_view spec, std::uint64_t seed, double temperature) {
  check_guesser(spec);
  const AgentSpec s = AgentSpec::parse(spec);
  if (s.kind == "oracle") return std::make_unique<OracleGuesser>(kb_);
  if (s.kind == "random") return std::make_unique<RandomGuesser>(kb_, seed);
  if (s.kind == "scripted") {
    std::lock_guard lock(mu_);
    auto it = guesser_scripts_.find(s.arg);
    if (it == guesser_scripts_.end()) it = guesser_scripts_.emplace(s.arg, load_guesser_script(s.arg)).first;
    return std::make_unique<ScriptedGuesser>(it->second);
  }
  return std::make_unique<LlmGuesser>(transport_for(s.url), LlmAgentOptions{s.arg, kind_, temperature});
}

std::unique_ptr<Judge> AgentFactory::make_judge(std::string_view spec, double temperature) {
  check_judge(spec);
  const AgentSpec s = AgentSpec::parse(spec);
  if (s.kind == "mock") return std::make_unique<MockJudge>(kb_);
  if (s.kind == "scripted") {
    std::lock_guard lock(mu_);
    auto it = judge_scripts_.find(s.arg);
    if (it == judge_scripts_.end()) it = judge_scripts_.emplace(s.arg, load_judge_script(s.arg)).first;
    return std::make_unique<ScriptedJudge>(it->second, uncertain_answer(kind_));
  }
  return std::make_unique<LlmJudge>(transport_for(s.url), LlmAgentOptions{s.arg, kind_, temperature});
}

void MatchPlan::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (concurrency_limit < 1) throw std::invalid_argument("concurrency_limit must be >= 1");
  if (entities.empty()) throw std::invalid_argument("match plan has no entities");
  config.validate();
}

MatchResult run_matches(const MatchPlan& plan, AgentFactory& factory) {
  plan.validate();
  factory.check_guesser(plan.guesser_spec);
  factory.check_judge(plan.judge_spec);

  std::optional<JsonlWriter> writer;
  if (plan.output_path) writer.emplace(*plan.output_path);

  const std::size_t n_entities = plan.entities.size();
  const std::size_t n_jobs = n_entities * static_cast<std::size_t>(plan.repetitions);
  std::vector<Transcript> results(n_jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};

  auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      const int rep = static_cast<int>(job / n_entities);
      const std::string& entity = plan.entities[job % n_entities];
      const int now = ++in_flight;
      for (int p = peak.load(); now > p && !peak.compare_exchange_weak(p, now);) {
      }

      GameConfig cfg = plan.config;
      cfg.seed = rnd::game_seed(plan.config.seed, entity, rep);
      const GameLabels labels{plan.guesser_spec, plan.judge_spec, rep};
      Transcript t;
      try {
        auto guesser = factory.make_guesser(plan.guesser_spec, cfg.seed, cfg.guesser_temperature);
        auto judge = factory.make_judge(plan.judge_spec, cfg.judge_temperature);
        t = play_game(entity, *guesser, *judge, cfg, labels);
      } catch (const std::exception& e) {
        // Construction failures abort only this game.
        t.entity = entity;
        t.dataset_kind = cfg.dataset_kind;
        t.guesser_spec = labels.guesser_spec;
        t.judge_spec = labels.judge_spec;
        t.seed = cfg.seed;
        t.max_turns = cfg.max_turns;
        t.repetition = rep;
        t.aborted = true;
        t.abort_reason = e.what();
        finalize_metrics(t);
      }
      if (t.aborted) spdlog::warn("game '{}' rep {} aborted: {}", entity, rep, t.abort_reason);
      if (writer) writer->write(to_json(t));
      results[job] = std::move(t);
      --in_flight;
    }
  };

  {
    const int n_workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(plan.concurrency_limit), n_jobs));
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  MatchResult out;
  out.report = build_report(results);
  out.transcripts = std::move(results);
  out.peak_in_flight = peak.load();
  return out;
}

std::optional<SplitName> parse_split_name(std::string_view s) {
  if (s == "train") return SplitName::train;
  if (s == "eval") return SplitName::eval;
  if (s == "all") return SplitName::all;
  return std::nullopt;
}

std::vector<std::string> resolve_entities(const std::optional<std::filesystem::path>& dataset,
                                          const KnowledgeBase* kb, SplitName split_name, int eval_size,
                                          std::uint64_t split_seed) {
  std::vector<std::string> entities;
  if (dataset) {
    entities = load_entities(*dataset);
  } else if (kb) {
    for (const KbEntity& e : kb->entities()) entities.push_back(e.name);
  } else {
    throw std::invalid_argument("need an entity list or a knowledge base");
  }
  if (split_name == SplitName::all) return entities;
  Split s = split(entities, std::min<int>(eval_size, static_cast<int>(entities.size())), split_seed);
  return split_name == SplitName::eval ? s.eval : s.train;
}

namespace {

class SequenceJudge final : public Judge {
 public:
  SequenceJudge(std::vector<Answer> answers, Judge* tail, DatasetKind kind)
      : answers_(std::move(answers)), tail_(tail), kind_(kind) {}

  Answer answer(std::string_view entity, std::string_view question) override {
    if (next_ < answers_.size()) return answers_[next_++];
    ++next_;
    return tail_ ? tail_->answer(entity, question) : uncertain_answer(kind_);
  }
  // The engine skips the judge on Bingo turns; keep the cursor aligned.
  void skip() { ++next_; }

 private:
  std::vector<Answer> answers_;
  Judge* tail_;
  DatasetKind kind_;
  std::size_t next_ = 0;
};

class ReplayGuesser final : public Guesser {
 public:
  ReplayGuesser(std::vector<std::string> lines, SequenceJudge& judge, std::string entity)
      : lines_(std::move(lines)), judge_(judge), entity_(std::move(entity)) {}

  std::string next_question(std::span<const Turn> history) override {
    if (history.size() >= lines_.size()) throw AgentError("replay ran past the recorded turns");
    const std::string& q = lines_[history.size()];
    if (detect_bingo(q, entity_)) judge_.skip();
    return q;
  }

 private:
  std::vector<std::string> lines_;
  SequenceJudge& judge_;
  std::string entity_;
};

}  // namespace

Transcript replay_transcript(const Transcript& t, const std::optional<std::string>& swap_last, Judge* judge) {
  if (t.aborted) throw std::invalid_argument("cannot replay an aborted transcript");
  if (t.turns.empty()) throw std::invalid_argument("cannot replay an empty transcript");
  std::vector<std::string> questions;
  std::vector<Answer> answers;
  for (const Turn& turn : t.turns) {
    questions.push_back(turn.question);
    answers.push_back(turn.answer);
  }
  if (swap_last) {
    questions.back() = *swap_last;
    answers.pop_back();
  }
  SequenceJudge seq(std::move(answers), judge, t.dataset_kind);
  ReplayGuesser guesser(std::move(questions), seq, t.entity);

  GameConfig cfg;
  cfg.max_turns = t.max_turns;
  cfg.dataset_kind = t.dataset_kind;
  cfg.seed = t.seed;
  cfg.retry.max_retries = 0;
  cfg.retry.base_backoff = std::chrono::milliseconds(0);
  Transcript out = play_game(t.entity, guesser, seq, cfg, {t.guesser_spec, t.judge_spec, t.repetition});
  out.probe_log = t.probe_log;
  return out;
}

}  // namespace eda
