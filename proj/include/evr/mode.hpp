#pragma once

#include <array>
#include <string_view>

namespace evr {

// Generation condition. Canonical order (no_rag first) is used everywhere a
// deterministic ordering over modes is needed.
enum class Mode { NoRag, Rag };

inline constexpr std::array<Mode, 2> kAllModes = {Mode::NoRag, Mode::Rag};

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view s);

}  // namespace evr
