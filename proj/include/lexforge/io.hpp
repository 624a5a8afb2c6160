#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

namespace lexforge::io {

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// 1-based (line, column) of a byte offset.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

/// Parses JSON, converting nlohmann parse errors into ParseError with a line position.
nlohmann::json parse_json(std::string_view text, std::string_view source_name);

/// Compact, non-ASCII-escaping JSON text.
std::string dump_compact(const nlohmann::json& value);

}  // namespace lexforge::io
