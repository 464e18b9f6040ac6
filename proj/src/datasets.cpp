#include "eda/datasets.hpp"

#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "eda/random.hpp"
#include "eda/text.hpp"

namespace eda {

std::vector<std::string> parse_entities(const std::string& contents) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& raw : text::split_lines(contents)) {
    std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (seen.emplace(line).second) out.emplace_back(line);
  }
  return out;
}

std::vector<std::string> load_entities(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open entity list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::vector<std::string> out = parse_entities(buf.str());
  if (out.empty()) throw EmptyDatasetError("entity list " + path.string() + " has no entries");
  return out;
}

Split split(const std::vector<std::string>& entities, int eval_size, std::uint64_t seed) {
  if (eval_size < 0 || static_cast<std::size_t>(eval_size) > entities.size()) {
    throw std::out_of_range("eval_size " + std::to_string(eval_size) + " outside [0, " +
                            std::to_string(entities.size()) + "]");
  }
  std::vector<std::size_t> order(entities.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rnd::uniform_index(rng, i)]);
  }

  std::vector<bool> in_eval(entities.size(), false);
  for (int i = 0; i < eval_size; ++i) in_eval[order[static_cast<std::size_t>(i)]] = true;

  Split s;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    (in_eval[i] ? s.eval : s.train).push_back(entities[i]);
  }
  return s;
}

EntityDataset make_dataset(DatasetKind kind, const std::vector<std::string>& entities, int eval_size,
                           std::uint64_t seed) {
  Split s = split(entities, eval_size, seed);
  return {kind, std::move(s.train), std::move(s.eval)};
}

}  // namespace eda
