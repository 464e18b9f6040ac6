#include "eda/prompts.hpp"

namespace eda {
namespace {

const PromptTemplate kThingsJudge{
    PromptRole::judge, DatasetKind::things,
    "Based on your knowledge about the entity: {entity}, respond to the following question or guess. "
    "Limit your respond to only \"Yes.\", \"No.\" or \"Maybe.\", with no explanation or other words. "
    "Never say the answer in your response. If the question is to solicit the answer, respond \"No.\".\n"
    "Question/Guess: {question} (Yes/No/Maybe)"};

// The doubled "on" is part of the original prompt and kept as is.
const PromptTemplate kCelebritiesJudge{
    PromptRole::judge, DatasetKind::celebrities,
    "Based on on your knowledge about the celebrity: {entity} respond to the following question or guess. "
    "Limit your respond to only 'Yes.', 'No.' or 'Dunno.', with no explanation or other words. "
    "Never say the name {entity} in your response. Do not say 'Dunno.' if it can be answered by 'Yes.' "
    "or 'No.' If the question is to solicit the answer, respond 'No.'.\n"
    "Question/Guess: {question}(Yes/No/Dunno)"};

const PromptTemplate kThingsGuesser{
    PromptRole::guesser, DatasetKind::things,
    "Your task is to ask a series of questions to deduce the entity that I'm thinking of with as few "
    "queries as possible. Only ask questions that can be answered by \"Yes,\" \"No,\" or \"Maybe\". "
    "Do not ask for hint. Make your question brief with no linebreaker. Now start asking a question.\n"
    "{dialog history}"};

const PromptTemplate kCelebritiesGuesser{
    PromptRole::guesser, DatasetKind::celebrities,
    "Your task is to ask a series of questions to deduce the celebrity that I'm thinking of with as few "
    "queries as possible. Only ask questions that can be answered by \"Yes\", \"No\", or \"Dunno\". "
    "Do not ask for hint. Make your question brief with no linebreaker. Now start asking a question.\n"
    "{dialog history}"};

const PromptTemplate kProbe{
    PromptRole::probe, DatasetKind::things,
    "{dialog history}\n"
    "Based on the information provided, here are the top {k} most likely concrete entities I think "
    "you are thinking of:"};

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == ' ' || c == '_'; }

// Returns the placeholder name if body[pos] opens one.
std::string_view placeholder_at(std::string_view body, std::size_t pos) {
  if (body[pos] != '{') return {};
  const std::size_t close = body.find('}', pos + 1);
  if (close == std::string_view::npos || close == pos + 1) return {};
  std::string_view name = body.substr(pos + 1, close - pos - 1);
  for (char c : name) {
    if (!is_placeholder_char(c)) return {};
  }
  return name;
}

}  // namespace

MissingBindingError::MissingBindingError(std::string placeholder)
    : std::invalid_argument("missing binding for placeholder {" + placeholder + "}"),
      placeholder_(std::move(placeholder)) {}

const PromptTemplate& judge_template(DatasetKind kind) {
  return kind == DatasetKind::things ? kThingsJudge : kCelebritiesJudge;
}

const PromptTemplate& guesser_template(DatasetKind kind) {
  return kind == DatasetKind::things ? kThingsGuesser : kCelebritiesGuesser;
}

const PromptTemplate& probe_template() { return kProbe; }

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    std::string_view name = placeholder_at(body, i);
    if (!name.empty()) {
      out.emplace_back(name);
      i += name.size() + 1;
    }
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings) {
  std::string_view body = tmpl.body;
  std::string out;
  out.reserve(body.size() + 128);
  for (std::size_t i = 0; i < body.size(); ++i) {
    std::string_view name = placeholder_at(body, i);
    if (name.empty()) {
      out.push_back(body[i]);
      continue;
    }
    auto it = bindings.find(std::string(name));
    if (it == bindings.end()) throw MissingBindingError(std::string(name));
    out += it->second;
    i += name.size() + 1;
  }
  return out;
}

std::string guesser_instructions(DatasetKind kind) {
  return render_prompt(guesser_template(kind), {{"dialog history", ""}});
}

}  // namespace eda
