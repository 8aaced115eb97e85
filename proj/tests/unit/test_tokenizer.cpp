#include <gtest/gtest.h>

#include "evr/error.hpp"
#include "evr/tokenizer.hpp"

namespace evr {
namespace {

TEST(WhitespaceTokenizer, CountsMatchPythonSplit) {
    // Counts frozen from tests/oracles/token_count_oracle.py (len(s.split())).
    struct Case {
        const char* text;
        std::size_t count;
    };
    const Case cases[] = {
        {"", 0},
        {"   ", 0},
        {"one", 1},
        {"two words", 2},
        {"  leading and trailing  ", 3},
        {"tabs\tand\nnewlines\r\nmixed", 4},
        {"nbsp\u00a0separated", 2},
        {"em\u2003space and ideographic\u3000space", 5},
        {"zero\u200bwidth stays joined", 3},
        {"file\x1cgroup\x1drecord\x1eunit\x1fseparators", 5},
        {"next\u0085line", 2},
        {"line\u2028para\u2029sep", 3},
        {"narrow\u202fnbsp and figure\u2007space", 5},
        {"vertical\x0btab\x0c" "feed", 3},
        {"caf\u00e9 na\u00efve r\u00e9sum\u00e9", 3},
        {"\u00c9tude r\u00e9tinienne, 2019; 12(3): 45\u201350.", 5},
    };
    const WhitespaceTokenizer tok;
    for (const auto& c : cases) EXPECT_EQ(count_tokens(c.text, tok), c.count) << c.text;
}

TEST(WhitespaceTokenizer, PiecesAreByteSpans) {
    const WhitespaceTokenizer tok;
    const std::string s = " ab  cé ";
    const auto p = tok.pieces(s);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(s.substr(p[0].begin, p[0].end - p[0].begin), "ab");
    EXPECT_EQ(s.substr(p[1].begin, p[1].end - p[1].begin), "cé");
    EXPECT_EQ(p[1].cost, 1u);
}

TEST(CharBudgetTokenizer, CostIsCeilOfCodePoints) {
    const CharBudgetTokenizer tok(4);
    const auto p = tok.pieces("abcd abcde ééééé");
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[0].cost, 1u);
    EXPECT_EQ(p[1].cost, 2u);
    EXPECT_EQ(p[2].cost, 2u);  // five code points, ten bytes
    EXPECT_EQ(tok.count("abcd abcde"), 3u);
}

TEST(MakeTokenizer, ParsesSpecs) {
    EXPECT_EQ(make_tokenizer("whitespace")->name(), "whitespace");
    EXPECT_EQ(make_tokenizer("chars:4")->name(), "chars:4");
    EXPECT_THROW(make_tokenizer("chars:0"), ValidationError);
    EXPECT_THROW(make_tokenizer("bpe"), ValidationError);
}

}  // namespace
}  // namespace evr
