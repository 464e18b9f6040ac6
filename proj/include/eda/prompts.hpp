#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eda/game.hpp"

namespace eda {

enum class PromptRole { judge, guesser, probe };

// Body text uses {name} placeholders: {entity}, {question}, {dialog history}, {k}.
struct PromptTemplate {
  PromptRole role = PromptRole::judge;
  DatasetKind dataset_kind = DatasetKind::things;
  std::string body;
};

class MissingBindingError : public std::invalid_argument {
 public:
  explicit MissingBindingError(std::string placeholder);
  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};

const PromptTemplate& judge_template(DatasetKind kind);
const PromptTemplate& guesser_template(DatasetKind kind);
const PromptTemplate& probe_template();

// Names of the placeholders in body order, duplicates included.
std::vector<std::string> placeholders(std::string_view body);

// Single-pass substitution; bound values are inserted verbatim and never re-scanned.
std::string render_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings);

// Guesser instructions with an empty dialogue history (what a human player is shown).
std::string guesser_instructions(DatasetKind kind);

}  // namespace eda
