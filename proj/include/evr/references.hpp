#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evr/io.hpp"

namespace evr {

enum class ParseStatus { Unparsed, Parsed, Partial };

std::string_view to_string(ParseStatus s);

struct ParsedReference {
    std::size_t ref_index = 1;  // source numbering, 1-based
    std::string raw_text;
    std::vector<std::string> authors;  // "Surname Initials"
    bool et_al = false;
    std::string title;
    std::optional<std::string> journal_or_source;
    std::optional<int> year;
    std::optional<std::string> volume_issue_pages;
    std::optional<std::string> doi_or_url;
    ParseStatus status = ParseStatus::Unparsed;

    bool operator==(const ParsedReference&) const = default;
};

json to_json(const ParsedReference& ref);
ParsedReference reference_from_json(const json& j);

struct ReferenceBlock {
    bool found = false;
    std::string prefix;     // answer text before the header line, untouched
    std::string raw_block;  // header line through end of answer
    std::vector<ParsedReference> entries;
    std::vector<std::string> unparsed_lines;

    bool operator==(const ReferenceBlock&) const = default;
};

// Segmentation only: finds the last "References"/"Reference"/"Sources" header
// (case-insensitive, optional colon, optional markdown emphasis) and splits
// what follows into entries on "1." / "1)" / "[1]" / bullet enumerators.
// Wrapped lines join the open entry; a blank line closes it. Entries carry
// ref_index and raw_text; their fields are left unparsed.
ReferenceBlock extract_reference_block(std::string_view answer_text);

// AMA grammar: "Authors. Title. Journal. Year;Volume(Issue):Pages. doi:..."
// The author segment is the prefix before the first period when every
// comma-separated token looks like "Surname Initials" (optionally with a
// generational suffix such as "Jr" or "3rd", or a final "et al").
// Anything the grammar cannot place makes the status Partial; raw_text is
// always the input verbatim.
ParsedReference parse_ama_reference(std::string_view raw, std::size_t ref_index);

// extract_reference_block followed by parse_ama_reference on every entry.
ReferenceBlock parse_reference_block(std::string_view answer_text);

// First min(n, |entries|) entries in ref_index order.
std::vector<ParsedReference> top_n_references(const ReferenceBlock& block, std::size_t n = 3);

// "References:\n1. raw\n2. raw\n" for the entries of a block.
std::string render_reference_block(const ReferenceBlock& block);

}  // namespace evr
