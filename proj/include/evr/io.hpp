#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace evr {

using json = nlohmann::json;
using Clock = std::function<std::chrono::system_clock::time_point()>;

Clock system_clock();
// "2024-03-01T12:00:00Z"
std::string format_utc(std::chrono::system_clock::time_point tp);
int utc_year(std::chrono::system_clock::time_point tp);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// One JSON value per line. Blank lines are skipped; a malformed line throws
// ValidationError naming the line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<json>& rows);

// Durable append of one complete line: single write(2) on an O_APPEND
// descriptor followed by fsync.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

}  // namespace evr
