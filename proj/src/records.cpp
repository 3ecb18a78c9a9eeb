#include "stylo/records.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace stylo {

namespace {

const std::string& require_string(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + field + "'");
  if (!it->is_string()) throw ValidationError(std::string("field '") + field + "' is not a string");
  return it->get_ref<const std::string&>();
}

void reject_unknown_fields(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ValidationError("unexpected field '" + key + "'");
  }
}

template <typename T, typename Parse>
std::vector<T> parse_lines(std::istream& in, const std::string& source, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::ai ? "ai" : "human"; }

Label parse_label(std::string_view text) {
  if (text == "ai") return Label::ai;
  if (text == "human") return Label::human;
  throw ValidationError("unknown target label '" + std::string(text) + "'");
}

SubDatasetId SubDatasetId::parse(std::string_view label) {
  constexpr std::string_view sep = "_from_";
  auto pos = label.find(sep);
  if (pos == std::string_view::npos || pos == 0 || pos + sep.size() >= label.size())
    throw ValidationError("malformed sub-dataset label '" + std::string(label) + "'");
  return {std::string(label.substr(0, pos)), std::string(label.substr(pos + sep.size()))};
}

Prediction prediction_from_logits(double human_logit, double ai_logit) {
  Prediction p;
  p.logits = {human_logit, ai_logit};
  // Stable two-way softmax.
  double d = human_logit - ai_logit;
  p.prob_ai = d >= 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  p.label = ai_logit > human_logit ? Label::ai : Label::human;
  return p;
}

std::string clean_snippet(std::string_view code) {
  constexpr std::string_view ws = " \t\n\r\v\f";
  auto first = code.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = code.find_last_not_of(ws);
  return std::string(code.substr(first, last - first + 1));
}

RawSnippet raw_snippet_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  reject_unknown_fields(j, {"task_name", "task_url", "task_description", "language_name", "code"});
  return {require_string(j, "task_name"), require_string(j, "task_url"),
          require_string(j, "task_description"), require_string(j, "language_name"),
          require_string(j, "code")};
}

ordered_json to_json(const RawSnippet& s) {
  ordered_json j;
  j["task_name"] = s.task_name;
  j["task_url"] = s.task_url;
  j["task_description"] = s.task_description;
  j["language_name"] = s.language_name;
  j["code"] = s.code;
  return j;
}

SnippetRecord snippet_record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  reject_unknown_fields(j, {"task_name", "task_url", "task_description", "language_name", "code",
                            "target", "set"});
  SnippetRecord r;
  r.task_name = require_string(j, "task_name");
  r.task_url = require_string(j, "task_url");
  r.task_description = require_string(j, "task_description");
  r.language_name = require_string(j, "language_name");
  r.code = require_string(j, "code");
  r.target = parse_label(require_string(j, "target"));
  r.set = require_string(j, "set");
  return r;
}

ordered_json to_json(const SnippetRecord& r) {
  ordered_json j;
  j["task_name"] = r.task_name;
  j["task_url"] = r.task_url;
  j["task_description"] = r.task_description;
  j["language_name"] = r.language_name;
  j["code"] = r.code;
  j["target"] = std::string(to_string(r.target));
  j["set"] = r.set;
  return j;
}

std::vector<RawSnippet> read_raw_snippets(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_lines<RawSnippet>(in, path.string(), raw_snippet_from_json);
}

std::vector<SnippetRecord> parse_records(std::istream& in, const std::string& source_name) {
  return parse_lines<SnippetRecord>(in, source_name, snippet_record_from_json);
}

std::vector<SnippetRecord> read_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_records(in, path.string());
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_lines<nlohmann::json>(in, path.string(), [](nlohmann::json j) { return j; });
}

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += dump_line(row);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_records(const std::filesystem::path& path, const std::vector<SnippetRecord>& records) {
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

void write_raw_snippets(const std::filesystem::path& path, const std::vector<RawSnippet>& snippets) {
  std::vector<ordered_json> rows;
  rows.reserve(snippets.size());
  for (const auto& s : snippets) rows.push_back(to_json(s));
  write_jsonl(path, rows);
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  static std::atomic<unsigned long> counter{0};
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace stylo
