// Command-line front end: batch runs, reports, exports, replay and the play server.
#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "eda/datasets.hpp"
#include "eda/knowledge_base.hpp"
#include "eda/metrics.hpp"
#include "eda/play_server.hpp"
#include "eda/rewards.hpp"
#include "eda/runner.hpp"
#include "eda/transcript_io.hpp"

namespace fs = std::filesystem;
using namespace eda;

namespace {

std::vector<Transcript> read_all(const std::vector<std::string>& paths) {
  std::vector<Transcript> out;
  for (const auto& p : paths) {
    auto ts = read_transcripts(p);
    out.insert(out.end(), std::make_move_iterator(ts.begin()), std::make_move_iterator(ts.end()));
  }
  return out;
}

std::shared_ptr<const KnowledgeBase> load_kb(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const KnowledgeBase>(KnowledgeBase::load(path));
}

DatasetKind kind_arg(const std::string& s) {
  auto k = parse_dataset_kind(s);
  if (!k) throw CLI::ValidationError("--kind", "expected things or celebs");
  return *k;
}

std::string report_label(const std::vector<Transcript>& ts) {
  for (const Transcript& t : ts) {
    if (!t.aborted) return t.guesser_spec + " vs " + t.judge_spec;
  }
  return "run";
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-deduction game benchmark"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

  // run
  auto* run = app.add_subcommand("run", "Play guesser vs judge over a dataset split");
  std::string dataset, kb_path, kind = "things", split = "eval", guesser, judge, out_dir;
  int eval_size = kEvalSize, reps = 5, max_turns = kDefaultMaxTurns, concurrency = 8, probe_k = 5, retries = 2;
  std::uint64_t seed = 42, split_seed = 0;
  bool probe = false;
  double judge_temp = 0.2, guesser_temp = 0.8;
  run->add_option("--dataset", dataset, "Entity list, one per line")->check(CLI::ExistingFile);
  run->add_option("--kb", kb_path, "Knowledge base JSON (mock/oracle/random agents)")->check(CLI::ExistingFile);
  run->add_option("--kind", kind, "things or celebs");
  run->add_option("--split", split, "eval, train or all")->check(CLI::IsMember({"eval", "train", "all"}));
  run->add_option("--eval-size", eval_size)->check(CLI::NonNegativeNumber);
  run->add_option("--split-seed", split_seed);
  run->add_option("--guesser", guesser, "Guesser spec")->required();
  run->add_option("--judge", judge, "Judge spec")->required();
  run->add_option("--reps", reps)->check(CLI::PositiveNumber);
  run->add_option("--max-turns", max_turns)->check(CLI::Range(2, 1000));
  run->add_option("--concurrency", concurrency)->check(CLI::PositiveNumber);
  run->add_option("--seed", seed);
  run->add_flag("--probe", probe, "Record top-k probes before each guesser turn");
  run->add_option("--probe-k", probe_k)->check(CLI::PositiveNumber);
  run->add_option("--retries", retries)->check(CLI::NonNegativeNumber);
  run->add_option("--judge-temperature", judge_temp);
  run->add_option("--guesser-temperature", guesser_temp);
  run->add_option("--out", out_dir, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Summarise transcripts");
  std::vector<std::string> report_in;
  bool report_json = false;
  std::string items_csv;
  report->add_option("transcripts", report_in)->required()->check(CLI::ExistingFile);
  report->add_flag("--json", report_json);
  report->add_option("--items-csv", items_csv, "Write the per-entity breakdown");

  // export-bc
  auto* bc = app.add_subcommand("export-bc", "Export behaviour-cloning conversations");
  std::vector<std::string> bc_in;
  std::string bc_filter = "success_only", bc_out;
  bc->add_option("transcripts", bc_in)->required()->check(CLI::ExistingFile);
  bc->add_option("--filter", bc_filter)->check(CLI::IsMember({"all", "things_only", "celebs_only", "success_only"}));
  bc->add_option("--out", bc_out)->required();

  // annotate-rewards
  auto* rw = app.add_subcommand("annotate-rewards", "Per-turn rewards for each transcript");
  std::vector<std::string> rw_in;
  std::string rw_out;
  rw->add_option("transcripts", rw_in)->required()->check(CLI::ExistingFile);
  rw->add_option("--out", rw_out)->required();

  // replay
  auto* rp = app.add_subcommand("replay", "Re-drive the engine from stored transcripts");
  std::string rp_in, rp_swap, rp_judge, rp_kb;
  int rp_index = -1;
  rp->add_option("transcripts", rp_in)->required()->check(CLI::ExistingFile);
  rp->add_option("--index", rp_index, "Replay only this record (0-based)");
  rp->add_option("--swap-last", rp_swap, "Replace the final utterance");
  rp->add_option("--judge", rp_judge, "Judge for the swapped turn");
  rp->add_option("--kb", rp_kb)->check(CLI::ExistingFile);

  // serve
  auto* sv = app.add_subcommand("serve", "Human play server");
  std::string sv_things, sv_celebs, sv_kb_things, sv_kb_celebs, sv_judge = "mock", sv_ref, sv_listen = "127.0.0.1:8080";
  std::string sv_state, sv_static, sv_bench;
  bool sv_auto = false, sv_no_hint = false;
  int sv_idle = 30 * 60, sv_max_turns = kDefaultMaxTurns;
  sv->add_option("--things", sv_things, "Things entity list")->check(CLI::ExistingFile);
  sv->add_option("--celebs", sv_celebs, "Celebrities entity list")->check(CLI::ExistingFile);
  sv->add_option("--kb-things", sv_kb_things)->check(CLI::ExistingFile);
  sv->add_option("--kb-celebs", sv_kb_celebs)->check(CLI::ExistingFile);
  sv->add_option("--judge", sv_judge);
  sv->add_option("--reference-guesser", sv_ref, "Agent spec used for hints");
  sv->add_option("--listen", sv_listen, "host:port");
  sv->add_option("--state-dir", sv_state);
  sv->add_option("--static", sv_static, "Web UI bundle directory")->check(CLI::ExistingDirectory);
  sv->add_option("--benchmarks", sv_bench, "JSON list of {name, games, wins, mean_score}")->check(CLI::ExistingFile);
  sv->add_option("--idle-timeout", sv_idle, "Seconds")->check(CLI::PositiveNumber);
  sv->add_option("--max-turns", sv_max_turns)->check(CLI::Range(2, 1000));
  sv->add_flag("--auto-qualify", sv_auto, "Count games on the leaderboard without moderation");
  sv->add_flag("--no-hint", sv_no_hint);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (run->parsed()) {
      const DatasetKind k = kind_arg(kind);
      auto kb = load_kb(kb_path);
      if (kb && kb->dataset_kind() != k) spdlog::warn("KB dataset_kind differs from --kind");
      MatchPlan plan;
      plan.entities = resolve_entities(dataset.empty() ? std::nullopt : std::optional<fs::path>(dataset), kb.get(),
                                       *parse_split_name(split), eval_size, split_seed);
      plan.repetitions = reps;
      plan.guesser_spec = guesser;
      plan.judge_spec = judge;
      plan.config.max_turns = max_turns;
      plan.config.dataset_kind = k;
      plan.config.seed = seed;
      plan.config.probe_enabled = probe;
      plan.config.probe_k = probe_k;
      plan.config.retry.max_retries = retries;
      plan.config.judge_temperature = judge_temp;
      plan.config.guesser_temperature = guesser_temp;
      plan.concurrency_limit = concurrency;
      fs::create_directories(out_dir);
      plan.output_path = fs::path(out_dir) / "transcripts.jsonl";
      if (fs::exists(*plan.output_path)) fs::remove(*plan.output_path);

      AgentFactory factory(k, kb);
      MatchResult res = run_matches(plan, factory);
      std::ofstream(fs::path(out_dir) / "report.json") << to_json(res.report).dump(2) << "\n";
      std::cout << format_report_table(res.report, guesser + " vs " + judge);
      return 0;
    }
    if (report->parsed()) {
      auto ts = read_all(report_in);
      RunReport r = build_report(ts);
      if (report_json) {
        nlohmann::json j = to_json(r);
        j["items"] = to_json(breakdown_by_item(ts));
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << format_report_table(r, report_label(ts));
      }
      if (!items_csv.empty()) std::ofstream(items_csv) << items_to_csv(breakdown_by_item(ts));
      return 0;
    }
    if (bc->parsed()) {
      auto records = export_bc(read_all(bc_in), *parse_bc_filter(bc_filter));
      std::vector<nlohmann::json> lines;
      for (const BcRecord& r : records) lines.push_back(to_json(r));
      write_jsonl(bc_out, lines);
      spdlog::info("wrote {} records to {}", lines.size(), bc_out);
      return 0;
    }
    if (rw->parsed()) {
      auto ts = read_all(rw_in);
      std::vector<nlohmann::json> lines;
      int skipped = 0;
      for (const Transcript& t : ts) {
        if (t.aborted) {
          ++skipped;
          continue;
        }
        lines.push_back(to_json(annotate_rewards(t)));
      }
      write_jsonl(rw_out, lines);
      spdlog::info("wrote {} rollouts to {} ({} aborted skipped)", lines.size(), rw_out, skipped);
      return 0;
    }
    if (rp->parsed()) {
      auto ts = read_transcripts(rp_in);
      std::unique_ptr<Judge> swap_judge;
      int mismatches = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (rp_index >= 0 && static_cast<std::size_t>(rp_index) != i) continue;
        const Transcript& t = ts[i];
        if (t.aborted) continue;
        if (!rp_judge.empty() && !swap_judge) {
          AgentFactory f(t.dataset_kind, load_kb(rp_kb));
          swap_judge = f.make_judge(rp_judge, 0.2);
        }
        std::optional<std::string> swap;
        if (!rp_swap.empty()) swap = rp_swap;
        Transcript r = replay_transcript(t, swap, swap_judge.get());
        if (swap) {
          std::cout << fmt::format("{}: {} -> {} (turns {}, score {:.2f})\n", t.entity, t.won ? "won" : "lost",
                                   r.won ? "won" : "lost", r.num_turns, r.score);
        } else {
          const bool same = r.turns == t.turns && r.won == t.won && r.num_turns == t.num_turns &&
                            r.num_yes == t.num_yes && r.score == t.score;
          mismatches += same ? 0 : 1;
          std::cout << fmt::format("{}: {}\n", t.entity, same ? "identical" : "MISMATCH");
        }
      }
      return mismatches == 0 ? 0 : 1;
    }
    if (sv->parsed()) {
      ServerConfig cfg;
      auto add = [&](DatasetKind k, const std::string& list, const std::string& kbp) {
        auto kb = load_kb(kbp);
        if (list.empty() && !kb) return;
        ServedDataset ds;
        ds.entities = resolve_entities(list.empty() ? std::nullopt : std::optional<fs::path>(list), kb.get(),
                                       SplitName::all, 0, 0);
        ds.factory = std::make_shared<AgentFactory>(k, kb);
        cfg.datasets.emplace(k, std::move(ds));
      };
      add(DatasetKind::things, sv_things, sv_kb_things);
      add(DatasetKind::celebrities, sv_celebs, sv_kb_celebs);
      cfg.judge_spec = sv_judge;
      if (!sv_ref.empty()) cfg.reference_guesser_spec = sv_ref;
      cfg.hint_enabled = !sv_no_hint;
      cfg.max_turns = sv_max_turns;
      cfg.idle_timeout = std::chrono::seconds(sv_idle);
      if (!sv_state.empty()) cfg.state_dir = sv_state;
      cfg.auto_qualify = sv_auto;
      if (const char* tok = std::getenv("EDA_ADMIN_TOKEN")) cfg.admin_token = tok;
      if (!sv_bench.empty()) {
        std::ifstream in(sv_bench);
        for (const auto& b : nlohmann::json::parse(in)) {
          cfg.benchmarks.push_back({b.at("name"), b.at("games"), b.at("wins"), b.at("mean_score")});
        }
      }
      PlayService service(std::move(cfg));
      httplib::Server server;
      mount_play_api(server, service, sv_static.empty() ? std::nullopt : std::optional<fs::path>(sv_static));
      const auto colon = sv_listen.rfind(':');
      if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
      const std::string host = sv_listen.substr(0, colon);
      const int port = std::stoi(sv_listen.substr(colon + 1));
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      std::jthread stopper([&](std::stop_token st) {
        while (!st.stop_requested() && !g_stop) {
          std::this_thread::sleep_for(std::chrono::milliseconds(200));
          service.expire_idle();
        }
        server.stop();
      });
      spdlog::info("listening on {}:{}", host, port);
      if (!server.listen(host, port)) {
        spdlog::error("cannot listen on {}", sv_listen);
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
