#include "stylo/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "stylo/hash.hpp"

namespace stylo {

namespace {

constexpr int kRunCap = 16;

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead >= 0xF0) return 4;
  if (lead >= 0xE0) return 3;
  if (lead >= 0xC0) return 2;
  return 1;
}

void push_run(std::vector<std::string>& out, std::string_view kind, std::size_t n) {
  while (n > 0) {
    std::size_t take = std::min<std::size_t>(n, kRunCap);
    out.push_back("<" + std::string(kind) + std::to_string(take) + ">");
    n -= take;
  }
}

}  // namespace

std::vector<std::string> code_lexemes(std::string_view code) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(code[i]);
    std::size_t j = i + 1;
    if (c == ' ' || c == '\t') {
      while (j < n && code[j] == code[i]) ++j;
      push_run(out, c == ' ' ? "sp" : "tab", j - i);
    } else if (c == '\n') {
      out.emplace_back("\n");
    } else if (c == '\r' || c == '\v' || c == '\f') {
      // carriage returns and other control whitespace carry no style we keep
    } else if (is_word_start(c)) {
      while (j < n && is_word_char(static_cast<unsigned char>(code[j]))) ++j;
      out.emplace_back(code.substr(i, j - i));
    } else if (std::isdigit(c)) {
      while (j < n && (is_word_char(static_cast<unsigned char>(code[j])) || code[j] == '.')) ++j;
      out.emplace_back(code.substr(i, j - i));
    } else if (c >= 0x80) {
      j = std::min(n, i + utf8_length(c));
      out.emplace_back(code.substr(i, j - i));
    } else {
      out.emplace_back(1, static_cast<char>(c));
    }
    i = j;
  }
  return out;
}

bool is_layout_lexeme(std::string_view lexeme) {
  return lexeme == "\n" || (lexeme.size() > 3 && lexeme.front() == '<' && lexeme.back() == '>' &&
                            (lexeme.starts_with("<sp") || lexeme.starts_with("<tab")));
}

CodeTokenizer::CodeTokenizer() {
  for (const char* s : {"<pad>", "<s>", "</s>", "<unk>"}) add(s);
}

void CodeTokenizer::add(std::string lexeme) {
  if (index_.contains(lexeme)) return;
  index_.emplace(lexeme, static_cast<int>(vocab_.size()));
  vocab_.push_back(std::move(lexeme));
}

CodeTokenizer CodeTokenizer::build(const std::vector<std::string>& corpus, int max_vocab, int min_freq) {
  if (max_vocab < 5) throw ValidationError("max_vocab must be at least 5");
  std::map<std::string, long> counts;
  for (const auto& code : corpus)
    for (auto& lx : code_lexemes(code)) ++counts[std::move(lx)];
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  CodeTokenizer tok;
  for (auto& [lx, count] : ranked) {
    if (tok.size() >= max_vocab || count < min_freq) break;
    tok.add(lx);
  }
  return tok;
}

int CodeTokenizer::id_of(std::string_view lexeme) const {
  auto it = index_.find(std::string(lexeme));
  return it == index_.end() ? unk_id : it->second;
}

TokenSequence CodeTokenizer::tokenize(std::string_view code, int max_len) const {
  if (max_len < 2) throw std::invalid_argument("max_len must be at least 2");
  if (code.empty()) throw std::invalid_argument("cannot tokenize empty code");
  TokenSequence seq;
  seq.ids.push_back(start_id);
  for (const auto& lx : code_lexemes(code)) seq.ids.push_back(id_of(lx));
  seq.ids.push_back(end_id);
  if (seq.ids.size() > static_cast<std::size_t>(max_len)) {
    seq.ids.resize(static_cast<std::size_t>(max_len));
    seq.truncated = true;
  }
  return seq;
}

ordered_json CodeTokenizer::to_json() const {
  ordered_json j;
  j["kind"] = "code-lexeme-vocabulary";
  j["vocab"] = vocab_;
  return j;
}

CodeTokenizer CodeTokenizer::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "code-lexeme-vocabulary" || !j.contains("vocab"))
    throw ValidationError("not a tokenizer state file");
  auto vocab = j.at("vocab").get<std::vector<std::string>>();
  CodeTokenizer tok;
  if (vocab.size() < 4 || !std::equal(tok.vocab_.begin(), tok.vocab_.end(), vocab.begin()))
    throw ValidationError("tokenizer state lacks the special tokens");
  for (std::size_t i = 4; i < vocab.size(); ++i) {
    if (tok.index_.contains(vocab[i])) throw ValidationError("duplicate lexeme in tokenizer state");
    tok.add(vocab[i]);
  }
  return tok;
}

std::string CodeTokenizer::hash() const { return sha256_hex(dump_line(to_json())); }

}  // namespace stylo
