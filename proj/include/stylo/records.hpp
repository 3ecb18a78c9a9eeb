#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "stylo/types.hpp"

namespace stylo {

using ordered_json = nlohmann::ordered_json;

/// Line-delimited record files. One JSON object per line, UTF-8.
/// Blank lines are skipped; any other malformed line is a ValidationError
/// that carries the 1-based line number.

RawSnippet raw_snippet_from_json(const nlohmann::json& j);
ordered_json to_json(const RawSnippet& s);

SnippetRecord snippet_record_from_json(const nlohmann::json& j);
ordered_json to_json(const SnippetRecord& r);

std::vector<RawSnippet> read_raw_snippets(const std::filesystem::path& path);
std::vector<SnippetRecord> read_records(const std::filesystem::path& path);
std::vector<SnippetRecord> parse_records(std::istream& in, const std::string& source_name);

void write_records(const std::filesystem::path& path, const std::vector<SnippetRecord>& records);
void write_raw_snippets(const std::filesystem::path& path, const std::vector<RawSnippet>& snippets);

/// Writes one compact JSON object per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Serializes without escaping non-ASCII, so files stay byte-stable.
std::string dump_line(const ordered_json& j);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace stylo
