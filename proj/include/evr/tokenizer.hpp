#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace evr {

// A contiguous byte range of the input that chunking may not split, and the
// number of model tokens it costs against a budget.
struct TokenPiece {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t cost = 1;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::string name() const = 0;
    virtual std::vector<TokenPiece> pieces(std::string_view text) const = 0;

    std::size_t count(std::string_view text) const;
};

// One token per maximal run of non-whitespace code points.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::string name() const override { return "whitespace"; }
    std::vector<TokenPiece> pieces(std::string_view text) const override;
};

// Approximates subword tokenizers: each whitespace word costs
// ceil(code_points / chars_per_token) tokens.
class CharBudgetTokenizer final : public Tokenizer {
public:
    explicit CharBudgetTokenizer(std::size_t chars_per_token);

    std::string name() const override;
    std::vector<TokenPiece> pieces(std::string_view text) const override;

private:
    std::size_t chars_per_token_;
};

// "whitespace" or "chars:<N>".
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view spec);

std::size_t count_tokens(std::string_view text, const Tokenizer& tokenizer);

}  // namespace evr
