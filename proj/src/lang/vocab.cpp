#include "leo/lang/vocab.hpp"

#include <sstream>

namespace leo::lang {

namespace {

std::vector<std::string> build_token_list() {
  std::vector<std::string> tokens{"<pad>", "<bos>", "<eos>", "<unk>"};
  const char* words[] = {
      "turn",  "left",   "right", "around", "straight", "go",   "to",
      "the",   "take",   "a",     "back",   "keep",     "head", "continue",
      "walk",  "past",   "move",  "toward", "wait",     "at",   "stop",
      "near",
  };
  for (const char* w : words) tokens.emplace_back(w);
  for (const std::string& lm : Vocabulary::landmark_names()) {
    tokens.push_back(lm);
  }
  return tokens;
}

}  // namespace

const std::vector<std::string>& Vocabulary::landmark_names() {
  static const std::vector<std::string> names{
      "armchair", "bookcase",  "sofa",    "piano",  "fireplace", "mirror",
      "painting", "staircase", "fountain", "statue", "archway",
  };
  return names;
}

const std::string& Vocabulary::landmark_name(int category) {
  const auto& names = landmark_names();
  if (category < 1 || category > static_cast<int>(names.size())) {
    throw LookupError("no landmark name for category " +
                      std::to_string(category));
  }
  return names[category - 1];
}

const Vocabulary& Vocabulary::closed_world() {
  static const Vocabulary vocab(build_token_list());
  return vocab;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
  if (index_.size() != tokens_.size()) {
    throw ConfigError("vocabulary contains duplicate tokens");
  }
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size())) {
    throw LookupError("token id " + std::to_string(id) +
                      " outside vocabulary of size " +
                      std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<int> Vocabulary::tokenize(const std::string& text) const {
  std::vector<int> ids;
  std::istringstream ss(text);
  std::string word;
  while (ss >> word) ids.push_back(id(word));
  return ids;
}

std::string Vocabulary::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (const int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

}  // namespace leo::lang
