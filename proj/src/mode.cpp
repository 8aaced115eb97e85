#include "evr/mode.hpp"

#include <string>

#include "evr/error.hpp"

namespace evr {

std::string_view to_string(Mode mode) {
    return mode == Mode::Rag ? "rag" : "no_rag";
}

Mode parse_mode(std::string_view s) {
    if (s == "rag") return Mode::Rag;
    if (s == "no_rag") return Mode::NoRag;
    throw ValidationError("invalid_mode", "mode must be 'rag' or 'no_rag', got '" + std::string(s) + "'");
}

}  // namespace evr
