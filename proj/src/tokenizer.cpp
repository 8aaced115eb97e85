#include "evr/tokenizer.hpp"

#include <charconv>

#include "evr/error.hpp"
#include "evr/text.hpp"

namespace evr {

namespace {

struct Word {
    std::size_t begin;
    std::size_t end;
    std::size_t code_points;
};

std::vector<Word> words(std::string_view text) {
    std::vector<Word> out;
    std::size_t pos = 0;
    bool in_word = false;
    Word cur{};
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = text::decode_utf8(text, pos);
        if (text::is_space(cp)) {
            if (in_word) {
                cur.end = start;
                out.push_back(cur);
                in_word = false;
            }
            continue;
        }
        if (!in_word) {
            cur = Word{start, 0, 0};
            in_word = true;
        }
        ++cur.code_points;
    }
    if (in_word) {
        cur.end = text.size();
        out.push_back(cur);
    }
    return out;
}

}  // namespace

std::size_t Tokenizer::count(std::string_view text) const {
    std::size_t total = 0;
    for (const auto& p : pieces(text)) total += p.cost;
    return total;
}

std::vector<TokenPiece> WhitespaceTokenizer::pieces(std::string_view text) const {
    std::vector<TokenPiece> out;
    for (const auto& w : words(text)) out.push_back({w.begin, w.end, 1});
    return out;
}

CharBudgetTokenizer::CharBudgetTokenizer(std::size_t chars_per_token)
    : chars_per_token_(chars_per_token) {
    if (chars_per_token_ == 0) throw ValidationError("invalid_tokenizer", "chars_per_token must be >= 1");
}

std::string CharBudgetTokenizer::name() const {
    return "chars:" + std::to_string(chars_per_token_);
}

std::vector<TokenPiece> CharBudgetTokenizer::pieces(std::string_view text) const {
    std::vector<TokenPiece> out;
    for (const auto& w : words(text)) {
        out.push_back({w.begin, w.end, (w.code_points + chars_per_token_ - 1) / chars_per_token_});
    }
    return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view spec) {
    if (spec == "whitespace") return std::make_unique<WhitespaceTokenizer>();
    if (spec.starts_with("chars:")) {
        std::size_t n = 0;
        const auto digits = spec.substr(6);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec == std::errc{} && ptr == digits.data() + digits.size() && n > 0) {
            return std::make_unique<CharBudgetTokenizer>(n);
        }
    }
    throw ValidationError("invalid_tokenizer", "unknown tokenizer spec '" + std::string(spec) + "'");
}

std::size_t count_tokens(std::string_view text, const Tokenizer& tokenizer) {
    return tokenizer.count(text);
}

}  // namespace evr
