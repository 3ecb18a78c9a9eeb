#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylo/records.hpp"

namespace stylo {

/// Splits source text into lexemes: identifiers, numbers, single punctuation
/// characters, whole UTF-8 sequences, "\n", and whitespace runs encoded as
/// "<sp{n}>" / "<tab{n}>" (n capped at 16 per lexeme). Layout is kept because
/// indentation habits are part of a coding style.
std::vector<std::string> code_lexemes(std::string_view code);

/// True for the whitespace lexemes emitted by code_lexemes.
bool is_layout_lexeme(std::string_view lexeme);

struct TokenSequence {
  std::vector<int> ids;
  bool truncated = false;
  std::size_t length() const { return ids.size(); }
};

/// Word-level vocabulary over code lexemes, built from a training corpus.
class CodeTokenizer {
 public:
  static constexpr int pad_id = 0;
  static constexpr int start_id = 1;  // "<s>", always at position 0
  static constexpr int end_id = 2;    // "</s>"
  static constexpr int unk_id = 3;

  CodeTokenizer();

  /// Most frequent lexemes first (ties broken lexicographically), at most
  /// max_vocab entries including the four specials.
  static CodeTokenizer build(const std::vector<std::string>& corpus, int max_vocab = 16000, int min_freq = 1);

  /// [<s>] + lexeme ids + [</s>], cut from the tail to max_len.
  TokenSequence tokenize(std::string_view code, int max_len) const;

  int size() const { return static_cast<int>(vocab_.size()); }
  int id_of(std::string_view lexeme) const;
  const std::string& lexeme(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }

  ordered_json to_json() const;
  static CodeTokenizer from_json(const nlohmann::json& j);
  /// SHA-256 of the canonical JSON form.
  std::string hash() const;

 private:
  void add(std::string lexeme);

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace stylo
