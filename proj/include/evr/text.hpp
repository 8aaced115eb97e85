#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evr::text {

// Decodes one UTF-8 code point starting at `pos` and advances `pos`.
// Invalid sequences decode as U+FFFD and consume a single byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

// Same set of code points Python's str.split() treats as separators.
bool is_space(char32_t cp);
bool is_control(char32_t cp);

// Collapses whitespace runs to one ASCII space, drops control characters,
// trims both ends.
std::string normalize_whitespace(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Maps accented Latin letters to their base letters ("é" -> "e", "ß" -> "ss").
// Returns an empty view when the code point has no folding.
std::string_view fold_diacritic(char32_t cp);

}  // namespace evr::text

namespace evr {

// FNV-1a over the bytes, seeded by xor-ing the offset basis, finished with a
// splitmix64 avalanche. Stable across platforms; ids and the local embedder
// depend on it.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed = 0);
std::string hex64(std::uint64_t v);

}  // namespace evr
