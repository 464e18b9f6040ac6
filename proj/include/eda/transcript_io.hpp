#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eda/game.hpp"

namespace eda {

inline constexpr int kTranscriptSchemaVersion = 1;

class TranscriptFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);

// Reads a JSONL file. A truncated final line (from a killed writer) is skipped;
// malformed lines elsewhere throw TranscriptFormatError.
std::vector<Transcript> read_transcripts(const std::filesystem::path& path);

// Appends one complete record per line and flushes after each, so a crash leaves
// a parseable prefix. Safe to share across threads.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path, bool truncate = false);
  void write(const nlohmann::json& record);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

}  // namespace eda
