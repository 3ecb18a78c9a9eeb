#include "stylo/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "stylo/tokenizer.hpp"
#include "stylo/types.hpp"

namespace stylo {

namespace {

using KeywordTable = std::map<std::string, std::vector<std::string>, std::less<>>;

const KeywordTable& keyword_table() {
  static const KeywordTable table{
      {"C",
       {"auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
        "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed",
        "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while"}},
      {"C++",
       {"auto",     "bool",      "break",    "case",     "catch",   "char",     "class",    "const",
        "constexpr", "continue", "default",  "delete",   "do",      "double",   "else",     "enum",
        "explicit", "extern",    "false",    "float",    "for",     "friend",   "if",       "inline",
        "int",      "long",      "namespace", "new",     "nullptr", "operator", "private",  "protected",
        "public",   "return",    "short",    "signed",   "sizeof",  "static",   "struct",   "switch",
        "template", "this",      "throw",    "true",     "try",     "typedef",  "typename", "unsigned",
        "using",    "virtual",   "void",     "while"}},
      {"C#",
       {"abstract", "as",       "base",      "bool",     "break",   "case",     "catch",     "char",
        "class",    "const",    "continue",  "decimal",  "default", "do",       "double",    "else",
        "enum",     "false",    "finally",   "float",    "for",     "foreach",  "if",        "in",
        "int",      "interface", "internal", "is",       "long",    "namespace", "new",      "null",
        "out",      "override", "private",   "protected", "public", "readonly", "ref",       "return",
        "static",   "string",   "struct",    "switch",   "this",    "throw",    "true",      "try",
        "using",    "var",      "virtual",   "void",     "while"}},
      {"Go",
       {"break", "case", "chan", "const", "continue", "default", "defer", "else", "fallthrough", "for", "func", "go",
        "goto", "if", "import", "interface", "map", "package", "range", "return", "select", "struct", "switch", "type",
        "var"}},
      {"Java",
       {"abstract", "boolean", "break",      "byte",    "case",     "catch",     "char",    "class",
        "continue", "default", "do",         "double",  "else",     "enum",      "extends", "final",
        "finally",  "float",   "for",        "if",      "implements", "import",  "instanceof", "int",
        "interface", "long",   "new",        "null",    "package",  "private",   "protected", "public",
        "return",   "short",   "static",     "super",   "switch",   "synchronized", "this",  "throw",
        "throws",   "try",     "var",        "void",    "while"}},
      {"JavaScript",
       {"async", "await", "break", "case", "catch", "class", "const", "continue", "default", "delete", "do", "else",
        "export", "extends", "false", "finally", "for", "function", "if", "import", "in", "instanceof", "let", "new",
        "null", "of", "return", "super", "switch", "this", "throw", "true", "try", "typeof", "undefined", "var",
        "void", "while", "yield"}},
      {"Kotlin",
       {"as", "break", "class", "companion", "continue", "data", "do", "else", "false", "for", "fun", "if", "import",
        "in", "interface", "is", "it", "lateinit", "null", "object", "open", "override", "package", "private",
        "return", "sealed", "super", "this", "throw", "true", "try", "val", "var", "when", "while"}},
      {"Python",
       {"False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
        "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
        "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield"}},
      {"Ruby",
       {"BEGIN", "END", "alias", "and", "begin", "break", "case", "class", "def", "defined", "do", "else", "elsif",
        "end", "ensure", "false", "for", "if", "in", "module", "next", "nil", "not", "or", "puts", "redo", "rescue",
        "retry", "return", "self", "super", "then", "true", "undef", "unless", "until", "when", "while", "yield"}},
      {"Rust",
       {"as", "break", "const", "continue", "crate", "else", "enum", "extern", "false", "fn", "for", "if", "impl",
        "in", "let", "loop", "match", "mod", "move", "mut", "pub", "ref", "return", "self", "Self", "static",
        "struct", "super", "trait", "true", "type", "unsafe", "use", "where", "while"}},
  };
  return table;
}

bool hash_comments(std::string_view lang) { return lang == "Python" || lang == "Ruby"; }
bool block_comments(std::string_view lang) { return !hash_comments(lang); }
bool single_quote_strings(std::string_view lang) { return lang != "Rust"; }

std::vector<std::string_view> split_lines(std::string_view code) {
  std::vector<std::string_view> lines;
  if (code.empty()) return lines;
  std::size_t start = 0;
  while (start <= code.size()) {
    auto nl = code.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < code.size()) lines.push_back(code.substr(start));
      break;
    }
    lines.push_back(code.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::size_t comment_lines(const std::vector<std::string_view>& lines, std::string_view lang) {
  const bool hash = hash_comments(lang), block = block_comments(lang), squote = single_quote_strings(lang);
  bool in_block = false;
  std::size_t count = 0;
  for (auto line : lines) {
    bool has_comment = in_block;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      char next = i + 1 < line.size() ? line[i + 1] : '\0';
      if (in_block) {
        if (c == '*' && next == '/') {
          in_block = false;
          ++i;
        }
        continue;
      }
      if (quote) {
        if (c == '\\') ++i;
        else if (c == quote) quote = 0;
        continue;
      }
      if (c == '"' || (c == '\'' && squote)) {
        quote = c;
      } else if (hash && c == '#') {
        has_comment = true;
        break;
      } else if (!hash && c == '/' && next == '/') {
        has_comment = true;
        break;
      } else if (block && c == '/' && next == '*') {
        has_comment = in_block = true;
        ++i;
      }
    }
    count += has_comment && !is_blank(line);
  }
  return count;
}

}  // namespace

double FeatureVector::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw std::out_of_range("no feature named " + std::string(name));
}

bool has_keyword_list(std::string_view language) { return keyword_table().contains(language); }

const std::vector<std::string>& language_keywords(std::string_view language) {
  auto it = keyword_table().find(language);
  if (it == keyword_table().end()) throw ValidationError("no keyword list for language '" + std::string(language) + "'");
  return it->second;
}

std::vector<std::string> keyword_languages() {
  std::vector<std::string> out;
  for (const auto& [name, kws] : keyword_table()) out.push_back(name);
  return out;
}

FeatureVector extract_features(std::string_view code, std::string_view language) {
  const auto& keywords = language_keywords(language);
  FeatureVector fv;
  auto add = [&](std::string name, double v) {
    fv.names.push_back(std::move(name));
    fv.values.push_back(std::isfinite(v) ? v : 0.0);
  };
  auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };

  const auto lines = split_lines(code);
  const double n_lines = static_cast<double>(lines.size());
  double len_sum = 0, len_max = 0, blank = 0, indented = 0, tab_indented = 0;
  std::vector<double> indents;
  for (auto line : lines) {
    len_sum += static_cast<double>(line.size());
    len_max = std::max(len_max, static_cast<double>(line.size()));
    if (is_blank(line)) {
      ++blank;
      continue;
    }
    double cols = 0;
    bool tab = false;
    for (char c : line) {
      if (c == ' ') cols += 1;
      else if (c == '\t') cols += 4, tab = true;
      else break;
    }
    indents.push_back(cols);
    if (cols > 0) ++indented, tab_indented += tab;
  }
  double indent_mean = 0, indent_max = 0, indent_var = 0;
  for (double d : indents) indent_mean += d, indent_max = std::max(indent_max, d);
  indent_mean = ratio(indent_mean, static_cast<double>(indents.size()));
  for (double d : indents) indent_var += (d - indent_mean) * (d - indent_mean);
  indent_var = ratio(indent_var, static_cast<double>(indents.size()));
  double ws = 0;
  for (unsigned char c : code) ws += std::isspace(c) ? 1 : 0;

  add("line_count", n_lines);
  add("mean_line_length", ratio(len_sum, n_lines));
  add("max_line_length", len_max);
  add("mean_indent", indent_mean);
  add("max_indent", indent_max);
  add("indent_std", std::sqrt(indent_var));
  add("blank_line_ratio", ratio(blank, n_lines));
  add("whitespace_ratio", ratio(ws, static_cast<double>(code.size())));
  add("tab_indent_ratio", ratio(tab_indented, indented));

  const std::unordered_set<std::string_view> kwset(keywords.begin(), keywords.end());
  std::map<std::string_view, double> kw_counts;
  double tokens = 0, token_len = 0, identifiers = 0, numbers = 0;
  const auto lexemes = code_lexemes(code);
  for (const auto& lx : lexemes) {
    if (is_layout_lexeme(lx)) continue;
    ++tokens;
    token_len += static_cast<double>(lx.size());
    const auto c0 = static_cast<unsigned char>(lx[0]);
    if (std::isdigit(c0)) {
      ++numbers;
    } else if (std::isalpha(c0) || c0 == '_') {
      if (kwset.contains(lx)) ++kw_counts[lx];
      else ++identifiers;
    }
  }
  add("token_count", tokens);
  add("mean_token_length", ratio(token_len, tokens));
  add("identifier_count", identifiers);
  add("comment_ratio", ratio(static_cast<double>(comment_lines(lines, language)), n_lines - blank));
  add("numeric_literal_ratio", ratio(numbers, tokens));
  for (const auto& kw : keywords) {
    auto it = kw_counts.find(kw);
    add("kw:" + kw, ratio(it == kw_counts.end() ? 0.0 : it->second, tokens));
  }
  return fv;
}

}  // namespace stylo
