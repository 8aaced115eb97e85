#include <gtest/gtest.h>

#include "evr/error.hpp"
#include "evr/references.hpp"
#include "test_support.hpp"

namespace evr {
namespace {

TEST(ExtractBlock, CanonicalForm) {
    const auto b = extract_reference_block("Some answer.\n\nReferences:\n1. A\n2. B");
    EXPECT_TRUE(b.found);
    ASSERT_EQ(b.entries.size(), 2u);
    EXPECT_EQ(b.entries[0].raw_text, "A");
    EXPECT_EQ(b.entries[1].ref_index, 2u);
    EXPECT_EQ(b.prefix, "Some answer.\n\n");
    EXPECT_EQ(b.raw_block, "References:\n1. A\n2. B");
}

TEST(ExtractBlock, AbsentSection) {
    const std::string answer = "Use lubricating drops.\nFollow up in 3 months.";
    const auto b = extract_reference_block(answer);
    EXPECT_FALSE(b.found);
    EXPECT_TRUE(b.entries.empty());
    EXPECT_EQ(b.prefix, answer);
}

TEST(ExtractBlock, HandLabeledVariants) {
    const auto variants = json::parse(read_file(testing::fixture("references/block_variants.json")));
    ASSERT_EQ(variants.size(), 20u);
    for (const auto& v : variants) {
        const auto answer = v.at("answer").get<std::string>();
        const auto b = extract_reference_block(answer);
        EXPECT_EQ(b.found, v.at("found").get<bool>()) << v.at("name");
        EXPECT_EQ(b.entries.size(), v.at("entries").get<std::size_t>()) << v.at("name");
        EXPECT_EQ(answer.substr(0, b.prefix.size()), b.prefix) << v.at("name");
        EXPECT_EQ(b.prefix + b.raw_block, b.found ? answer : b.prefix) << v.at("name");
        for (std::size_t i = 0; i < b.entries.size(); ++i) {
            EXPECT_EQ(b.entries[i].ref_index, i + 1) << v.at("name");
            EXPECT_FALSE(b.entries[i].raw_text.empty());
        }
    }
}

TEST(ExtractBlock, TrailingProseBecomesUnparsedLine) {
    const auto b = extract_reference_block("x\nReferences:\n1. A\n\nThanks for asking.");
    ASSERT_EQ(b.entries.size(), 1u);
    EXPECT_EQ(b.unparsed_lines, (std::vector<std::string>{"Thanks for asking."}));
}

TEST(ParseAma, FiveAuthorsFromFigureExample) {
    const auto r = parse_ama_reference(
        "Lee JW, Yau GS, Yuen CY, Wong RL, Yuen HK. Intraocular pressure changes after laser in situ "
        "keratomileusis. Clin Ophthalmol. 2015;9:1095-1099.",
        1);
    ASSERT_EQ(r.authors.size(), 5u);
    EXPECT_EQ(r.authors.front(), "Lee JW");
    EXPECT_EQ(r.authors.back(), "Yuen HK");
    EXPECT_FALSE(r.et_al);
    EXPECT_EQ(r.journal_or_source, "Clin Ophthalmol");
    EXPECT_EQ(r.year, 2015);
    EXPECT_EQ(r.volume_issue_pages, "9:1095-1099");
    EXPECT_EQ(r.status, ParseStatus::Parsed);
}

TEST(ParseAma, TitleOnlyIsPartial) {
    const auto r = parse_ama_reference("Title only.", 1);
    EXPECT_EQ(r.title, "Title only");
    EXPECT_TRUE(r.authors.empty());
    EXPECT_FALSE(r.journal_or_source);
    EXPECT_EQ(r.status, ParseStatus::Partial);
}

TEST(ParseAma, EtAlFlagsWithoutInventingNames) {
    const auto r = parse_ama_reference("Brown DM, Kaiser PK, et al. Ranibizumab. N Engl J Med. 2006;355:1432.", 2);
    EXPECT_TRUE(r.et_al);
    EXPECT_EQ(r.authors, (std::vector<std::string>{"Brown DM", "Kaiser PK"}));
    EXPECT_EQ(r.ref_index, 2u);
}

TEST(ParseAma, DoiForms) {
    EXPECT_EQ(parse_ama_reference("A B. T. J. 2001;1:1. doi:10.1000/xyz.", 1).doi_or_url, "10.1000/xyz");
    EXPECT_EQ(parse_ama_reference("A B. T. J. 2001;1:1. https://doi.org/10.1000/xyz", 1).doi_or_url, "10.1000/xyz");
    EXPECT_EQ(parse_ama_reference("T. Site. https://example.org/page", 1).doi_or_url, "https://example.org/page");
}

TEST(ParseAma, Preconditions) {
    EXPECT_THROW(parse_ama_reference("", 1), ValidationError);
    EXPECT_THROW(parse_ama_reference("x", 0), ValidationError);
}

TEST(ParseAma, RawTextIsLosslessOnOddInput) {
    for (const std::string raw : {"  spaced   out. ", "***bold*** J. 2001.", "no periods at all", "1999",
                                  "Ünïcödé Ä. Tïtle. Jöurnal. 2010;1:1."}) {
        EXPECT_EQ(parse_ama_reference(raw, 1).raw_text, raw);
    }
}

TEST(ParseAma, HandLabeledFixture) {
    const auto score = testing::score_reference_fixture();
    EXPECT_EQ(score.entries, 50u);
    EXPECT_EQ(score.raw_lossless, score.entries);
    EXPECT_EQ(score.well_formed_matched, score.well_formed_fields);
    EXPECT_GE(score.rate(), 0.95);
    for (const auto& m : score.mismatches) std::cout << "  mismatch " << m << '\n';
}

TEST(ReferenceBlock, ReparseOfRenderedBlockIsIdempotent) {
    const auto doc = json::parse(read_file(testing::fixture("references/ama_labeled.json")));
    for (const auto& blk : doc.at("blocks")) {
        const auto first = parse_reference_block(blk.at("answer").get<std::string>());
        const auto again = parse_reference_block(render_reference_block(first));
        ASSERT_EQ(first.entries.size(), again.entries.size());
        for (std::size_t i = 0; i < first.entries.size(); ++i) EXPECT_EQ(first.entries[i], again.entries[i]);
    }
}

TEST(ReferenceBlock, JsonRoundTrip) {
    const auto b = parse_reference_block("x\nReferences:\n1. Smith AB. T. Cornea. 2001;20(1):1-5. doi:10.1/x");
    ASSERT_EQ(b.entries.size(), 1u);
    EXPECT_EQ(reference_from_json(to_json(b.entries[0])), b.entries[0]);
}

TEST(TopN, ClampsAndOrders) {
    ReferenceBlock b;
    b.found = true;
    for (std::size_t i : {5u, 1u, 4u, 2u, 3u}) {
        ParsedReference r;
        r.ref_index = i;
        r.raw_text = "r" + std::to_string(i);
        b.entries.push_back(r);
    }
    const auto top = top_n_references(b);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top[0].ref_index, 1u);
    EXPECT_EQ(top[2].ref_index, 3u);
    b.entries.resize(2);
    EXPECT_EQ(top_n_references(b, 3).size(), 2u);
    EXPECT_TRUE(top_n_references(ReferenceBlock{}, 3).empty());
    EXPECT_THROW(top_n_references(b, 0), ValidationError);
}

}  // namespace
}  // namespace evr
