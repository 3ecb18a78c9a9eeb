#pragma once

#include <array>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stylo {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: configuration, missing files, malformed records.
/// The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

enum class Label : int { human = 0, ai = 1 };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

/// One solution from the task-solution corpus.
struct RawSnippet {
  std::string task_name;
  std::string task_url;
  std::string task_description;
  std::string language_name;
  std::string code;

  bool operator==(const RawSnippet&) const = default;
};

/// Ordered (destination, provenance) language pair naming a sub-dataset.
struct SubDatasetId {
  std::string dst;
  std::string src;

  /// "<Dst>_from_<Src>", e.g. "Java_from_C++".
  std::string label() const { return dst + "_from_" + src; }
  static SubDatasetId parse(std::string_view label);

  auto operator<=>(const SubDatasetId&) const = default;
};

/// One row of the labeled dataset.
struct SnippetRecord {
  std::string task_name;
  std::string task_url;
  std::string task_description;
  std::string language_name;
  std::string code;
  Label target = Label::human;
  std::string set;

  bool operator==(const SnippetRecord&) const = default;
};

struct SubDataset {
  SubDatasetId id;
  std::vector<SnippetRecord> records;
};

struct Dataset {
  std::vector<SnippetRecord> records;
};

/// Classifier output for one snippet. prob_ai is softmax(logits)[ai].
struct Prediction {
  Label label = Label::human;
  double prob_ai = 0.5;
  std::array<double, 2> logits{0.0, 0.0};
};

/// Softmax over a 2-logit vector, argmax label.
Prediction prediction_from_logits(double human_logit, double ai_logit);

/// Strips leading and trailing whitespace (space, tab, CR, LF, VT, FF).
std::string clean_snippet(std::string_view code);

}  // namespace stylo
