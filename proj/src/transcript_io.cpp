#include "eda/transcript_io.hpp"

#include "eda/text.hpp"

namespace eda {

nlohmann::json to_json(const Transcript& t) {
  nlohmann::json turns = nlohmann::json::array();
  for (const Turn& turn : t.turns) {
    turns.push_back({{"i", turn.index},
                     {"question", turn.question},
                     {"answer", std::string(answer_label(turn.answer))},
                     {"forced", turn.forced_guess_suffix_applied}});
  }
  nlohmann::json j = {{"schema_version", kTranscriptSchemaVersion},
                      {"dataset_kind", std::string(to_string(t.dataset_kind))},
                      {"entity", t.entity},
                      {"guesser_spec", t.guesser_spec},
                      {"judge_spec", t.judge_spec},
                      {"seed", t.seed},
                      {"max_turns", t.max_turns},
                      {"repetition", t.repetition},
                      {"turns", turns},
                      {"finished", t.finished},
                      {"won", t.won},
                      {"num_turns", t.num_turns},
                      {"num_yes", t.num_yes},
                      {"score", t.score}};
  if (t.probe_log) {
    nlohmann::json probes = nlohmann::json::array();
    for (const ProbeRecord& p : *t.probe_log) probes.push_back({{"turn", p.turn_index}, {"guesses", p.guesses}});
    j["probe_log"] = probes;
  }
  if (t.aborted) {
    j["aborted"] = true;
    j["abort_reason"] = t.abort_reason;
  }
  return j;
}

Transcript transcript_from_json(const nlohmann::json& j) {
  try {
    const int version = j.value("schema_version", 0);
    if (version != kTranscriptSchemaVersion) {
      throw TranscriptFormatError("unsupported transcript schema_version " + std::to_string(version));
    }
    Transcript t;
    auto kind = parse_dataset_kind(j.at("dataset_kind").get<std::string>());
    if (!kind) throw TranscriptFormatError("unknown dataset_kind");
    t.dataset_kind = *kind;
    t.entity = j.at("entity").get<std::string>();
    t.guesser_spec = j.value("guesser_spec", "");
    t.judge_spec = j.value("judge_spec", "");
    t.seed = j.value("seed", std::uint64_t{0});
    t.max_turns = j.value("max_turns", kDefaultMaxTurns);
    t.repetition = j.value("repetition", 0);
    for (const auto& jt : j.at("turns")) {
      Turn turn;
      turn.index = jt.at("i").get<int>();
      turn.question = jt.at("question").get<std::string>();
      auto a = parse_answer_label(jt.at("answer").get<std::string>());
      if (!a) throw TranscriptFormatError("unknown answer '" + jt.at("answer").get<std::string>() + "'");
      turn.answer = *a;
      turn.forced_guess_suffix_applied = jt.value("forced", false);
      t.turns.push_back(std::move(turn));
    }
    t.won = j.at("won").get<bool>();
    t.finished = j.value("finished", true);
    t.num_turns = j.at("num_turns").get<int>();
    t.num_yes = j.at("num_yes").get<int>();
    t.score = j.at("score").get<double>();
    if (j.contains("probe_log")) {
      std::vector<ProbeRecord> probes;
      for (const auto& jp : j.at("probe_log")) {
        probes.push_back({jp.at("turn").get<int>(), jp.at("guesses").get<std::vector<std::string>>()});
      }
      t.probe_log = std::move(probes);
    }
    t.aborted = j.value("aborted", false);
    t.abort_reason = j.value("abort_reason", "");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw TranscriptFormatError(std::string("malformed transcript: ") + e.what());
  }
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  // A final line without its newline may be a partial write.
  in.clear();
  in.seekg(0, std::ios::end);
  const auto size = static_cast<long long>(in.tellg());
  bool last_complete = true;
  if (size > 0) {
    in.seekg(size - 1);
    last_complete = in.get() == '\n';
  }

  std::vector<Transcript> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) {
      if (i + 1 == lines.size() && !last_complete) break;
      throw TranscriptFormatError(path.string() + ":" + std::to_string(i + 1) + ": invalid JSON");
    }
    out.push_back(transcript_from_json(j));
  }
  return out;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool truncate)
    : out_(path, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app)) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void JsonlWriter::write(const nlohmann::json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mu_);
  out_ << line;
  out_.flush();
  if (!out_) throw std::runtime_error("write failed");
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
  JsonlWriter w(path, true);
  for (const auto& r : records) w.write(r);
}

}  // namespace eda
