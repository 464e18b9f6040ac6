#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "eda/game.hpp"

namespace eda {

// Published split sizes: Things has 980 entities (30 eval / 950 train),
// Celebrities has 98 (30 eval / 68 train).
inline constexpr int kThingsSize = 980;
inline constexpr int kCelebritiesSize = 98;
inline constexpr int kEvalSize = 30;

class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EntityDataset {
  DatasetKind kind = DatasetKind::things;
  std::vector<std::string> train;
  std::vector<std::string> eval;
};

// One entity per line; blank lines and '#' comments skipped; trimmed; first
// occurrence of a duplicate wins.
std::vector<std::string> parse_entities(const std::string& contents);

// Throws std::runtime_error on I/O failure and EmptyDatasetError on no entries.
std::vector<std::string> load_entities(const std::filesystem::path& path);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> eval;
};

// Seeded random partition. Both halves keep the input order.
// Throws std::out_of_range unless 0 <= eval_size <= entities.size().
Split split(const std::vector<std::string>& entities, int eval_size, std::uint64_t seed);

EntityDataset make_dataset(DatasetKind kind, const std::vector<std::string>& entities, int eval_size,
                           std::uint64_t seed);

}  // namespace eda
