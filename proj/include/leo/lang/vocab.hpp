#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "leo/errors.hpp"

namespace leo::lang {

// Closed-world vocabulary: reserved specials, the template words, and the
// landmark names. Ids are dense from 0 and stable across runs.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  // The fixed vocabulary used by the synthetic instruction generator.
  static const Vocabulary& closed_world();

  // Landmark display names; category c >= 1 maps to landmark_name(c).
  static const std::vector<std::string>& landmark_names();
  static const std::string& landmark_name(int category);

  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  // kUnk for tokens outside the closed world.
  int id(const std::string& token) const;
  const std::string& token(int id) const;  // LookupError if out of range

  std::vector<int> tokenize(const std::string& text) const;
  // Space-joined tokens; PAD/BOS/EOS are skipped.
  std::string detokenize(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace leo::lang
