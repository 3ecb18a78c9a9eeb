#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stylo {

/// Named layout and lexical features of one snippet.
///
/// Layout: line_count, mean_line_length, max_line_length, mean_indent,
/// max_indent, indent_std, blank_line_ratio, whitespace_ratio,
/// tab_indent_ratio. Lexical: token_count, mean_token_length,
/// identifier_count, comment_ratio, numeric_literal_ratio, then one
/// "kw:<keyword>" frequency per keyword of the language, in list order.
///
/// Lines are split on '\n' (a final newline does not open a new line).
/// Indentation is measured in columns with a tab counted as 4. Tokens are
/// the non-layout code lexemes; every ratio over tokens or lines is 0 when
/// the denominator is 0.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Throws std::out_of_range for unknown names.
  double at(std::string_view name) const;
};

/// Number of features shared by every language, before the keyword block.
inline constexpr std::size_t kBaseFeatureCount = 14;

/// Keyword list used for `language`; throws ValidationError for languages
/// without one.
const std::vector<std::string>& language_keywords(std::string_view language);
bool has_keyword_list(std::string_view language);
std::vector<std::string> keyword_languages();

FeatureVector extract_features(std::string_view code, std::string_view language);

}  // namespace stylo
