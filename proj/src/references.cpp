#include "evr/references.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "evr/error.hpp"
#include "evr/text.hpp"

namespace evr {

namespace {

const std::regex& header_re() {
    static const std::regex re(
        R"(^\s*(?:#{1,6}\s*)?(?:\*\*|__)?(references?|sources)(?:\*\*|__)?\s*(:)?\s*(?:\*\*|__)?\s*(.*)$)",
        std::regex::icase | std::regex::optimize);
    return re;
}

struct Enumerated {
    std::optional<std::size_t> number;  // absent for bullets
    std::string rest;
};

std::optional<Enumerated> match_enumerator(std::string_view line) {
    static const std::regex numbered(R"(^\s*(?:\[(\d{1,3})\]\s*|(\d{1,3})[.)](?:\s+|$))(.*)$)",
                                     std::regex::optimize);
    static const std::regex bullet(R"(^\s*[-*•]\s+(.*)$)", std::regex::optimize);
    static const std::regex bullet_utf8("^\\s*\xE2\x80\xA2\\s*(.*)$", std::regex::optimize);
    std::cmatch m;
    const char* b = line.data();
    const char* e = line.data() + line.size();
    if (std::regex_match(b, e, m, numbered)) {
        const auto num = m[1].matched ? m[1].str() : m[2].str();
        return Enumerated{static_cast<std::size_t>(std::stoul(num)), m[3].str()};
    }
    if (std::regex_match(b, e, m, bullet_utf8) || std::regex_match(b, e, m, bullet)) {
        return Enumerated{std::nullopt, m[1].str()};
    }
    return std::nullopt;
}

// Splits "1. A [...] 2. B" style run-on lines at the next sequential
// enumerator when it follows a sentence end ('.', ']' or ')').
std::vector<Enumerated> split_inline(Enumerated first, std::size_t current) {
    std::vector<Enumerated> out;
    static const std::regex next_enum(R"(([.\])])\s+(?:\[(\d{1,3})\]|(\d{1,3})[.)])\s+)", std::regex::optimize);
    Enumerated cur = std::move(first);
    std::size_t expect = current + 1;
    while (true) {
        std::smatch m;
        std::string::const_iterator from = cur.rest.cbegin();
        bool split = false;
        while (std::regex_search(from, cur.rest.cend(), m, next_enum)) {
            const auto num = std::stoul(m[2].matched ? m[2].str() : m[3].str());
            if (num == expect) {
                const auto cut = static_cast<std::size_t>(m.position(0) + (from - cur.rest.cbegin())) + 1;
                const auto after = cut - 1 + static_cast<std::size_t>(m.length(0));
                Enumerated next{num, cur.rest.substr(after)};
                cur.rest = std::string(text::trim(cur.rest.substr(0, cut)));
                out.push_back(std::move(cur));
                cur = std::move(next);
                ++expect;
                split = true;
                break;
            }
            from = m[0].second;
        }
        if (!split) break;
    }
    out.push_back(std::move(cur));
    return out;
}

bool is_initials(std::string_view w) {
    if (w.empty() || w.size() > 3) return false;
    return std::all_of(w.begin(), w.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

bool is_particle(std::string_view w) {
    static constexpr std::array<std::string_view, 17> kParticles = {
        "van", "von", "de", "der", "den", "da", "di", "la", "le", "du", "del", "dos", "ten", "ter", "al", "el", "bin"};
    return std::find(kParticles.begin(), kParticles.end(), w) != kParticles.end();
}

bool is_name_word(std::string_view w) {
    if (w.empty()) return false;
    for (const char c : w) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x80 || std::isalpha(u) || c == '\'' || c == '-') continue;
        return false;
    }
    const auto first = static_cast<unsigned char>(w.front());
    return first >= 0x80 || std::isupper(first) || is_particle(w);
}

bool is_suffix(std::string_view w) {
    static constexpr std::array<std::string_view, 8> kSuffixes = {"Jr", "Sr", "II", "III", "IV", "2nd", "3rd", "4th"};
    return std::find(kSuffixes.begin(), kSuffixes.end(), w) != kSuffixes.end();
}

bool is_author_token(std::string_view tok) {
    auto words = text::split(tok, ' ');
    if (words.size() >= 3 && is_suffix(words.back())) words.pop_back();  // "Dupps WJ Jr"
    if (words.size() < 2 || words.size() > 5) return false;
    if (!is_initials(words.back())) return false;
    bool has_capitalized = false;
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        if (!is_name_word(words[i])) return false;
        if (!is_particle(words[i])) has_capitalized = true;
    }
    return has_capitalized;
}

bool is_et_al(std::string_view tok) {
    return text::iequals(tok, "et al") || text::iequals(tok, "et al.");
}

// Splits at sentence ends: '.', '?' or '!' followed by whitespace or end of
// text. '?' and '!' stay with their segment; '.' is dropped.
std::vector<std::string> sentence_segments(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if ((c == '.' || c == '?' || c == '!') && (i + 1 == s.size() || s[i + 1] == ' ')) {
            const std::size_t end = c == '.' ? i : i + 1;
            auto seg = std::string(text::trim(s.substr(start, end - start)));
            if (!seg.empty()) out.push_back(std::move(seg));
            start = i + 1;
        }
    }
    auto tail = std::string(text::trim(s.substr(std::min(start, s.size()))));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

std::string strip_trailing(std::string s, std::string_view chars) {
    while (!s.empty() && chars.find(s.back()) != std::string_view::npos) s.pop_back();
    return s;
}

void erase_match(std::string& s, const std::smatch& m) {
    s.erase(static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0)));
}

}  // namespace

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::Parsed: return "parsed";
        case ParseStatus::Partial: return "partial";
        case ParseStatus::Unparsed: return "unparsed";
    }
    return "unparsed";
}

json to_json(const ParsedReference& r) {
    auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
    return json{{"ref_index", r.ref_index},
                {"raw_text", r.raw_text},
                {"authors", r.authors},
                {"et_al", r.et_al},
                {"title", r.title},
                {"journal_or_source", opt(r.journal_or_source)},
                {"year", opt(r.year)},
                {"volume_issue_pages", opt(r.volume_issue_pages)},
                {"doi_or_url", opt(r.doi_or_url)},
                {"status", to_string(r.status)}};
}

ParsedReference reference_from_json(const json& j) {
    ParsedReference r;
    r.ref_index = j.at("ref_index").get<std::size_t>();
    r.raw_text = j.at("raw_text").get<std::string>();
    r.authors = j.value("authors", std::vector<std::string>{});
    r.et_al = j.value("et_al", false);
    r.title = j.value("title", "");
    if (j.contains("journal_or_source") && j["journal_or_source"].is_string())
        r.journal_or_source = j["journal_or_source"].get<std::string>();
    if (j.contains("year") && j["year"].is_number_integer()) r.year = j["year"].get<int>();
    if (j.contains("volume_issue_pages") && j["volume_issue_pages"].is_string())
        r.volume_issue_pages = j["volume_issue_pages"].get<std::string>();
    if (j.contains("doi_or_url") && j["doi_or_url"].is_string()) r.doi_or_url = j["doi_or_url"].get<std::string>();
    const auto st = j.value("status", "unparsed");
    r.status = st == "parsed" ? ParseStatus::Parsed : st == "partial" ? ParseStatus::Partial : ParseStatus::Unparsed;
    return r;
}

ReferenceBlock extract_reference_block(std::string_view answer) {
    ReferenceBlock block;

    // Locate the last header line.
    std::size_t header_at = std::string_view::npos;
    std::string inline_rest;
    {
        std::size_t line_start = 0;
        while (line_start <= answer.size()) {
            auto line_end = answer.find('\n', line_start);
            if (line_end == std::string_view::npos) line_end = answer.size();
            std::string line(answer.substr(line_start, line_end - line_start));
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::smatch m;
            if (std::regex_match(line, m, header_re())) {
                const bool has_colon = m[2].matched;
                const auto rest = std::string(text::trim(m[3].str()));
                if (rest.empty() || has_colon) {
                    header_at = line_start;
                    inline_rest = rest;
                }
            }
            if (line_end == answer.size()) break;
            line_start = line_end + 1;
        }
    }
    if (header_at == std::string_view::npos) {
        block.prefix = std::string(answer);
        return block;
    }
    block.found = true;
    block.prefix = std::string(answer.substr(0, header_at));
    block.raw_block = std::string(answer.substr(header_at));

    std::vector<std::string> lines = text::split_lines(block.raw_block);
    lines.erase(lines.begin());  // header
    if (!inline_rest.empty()) lines.insert(lines.begin(), inline_rest);

    const bool any_enumerator =
        std::any_of(lines.begin(), lines.end(), [](const std::string& l) { return match_enumerator(l).has_value(); });

    if (!any_enumerator) {
        std::size_t n = 0;
        for (const auto& l : lines) {
            const auto t = text::normalize_whitespace(l);
            if (t.empty()) continue;
            ParsedReference r;
            r.ref_index = ++n;
            r.raw_text = t;
            block.entries.push_back(std::move(r));
        }
        return block;
    }

    std::optional<Enumerated> open;
    std::size_t last_index = 0;
    auto close = [&] {
        if (!open) return;
        const auto current = *open->number;
        for (auto& e : split_inline(std::move(*open), current)) {
            ParsedReference r;
            r.ref_index = *e.number;
            r.raw_text = text::normalize_whitespace(e.rest);
            last_index = r.ref_index;
            if (!r.raw_text.empty()) block.entries.push_back(std::move(r));
        }
        open.reset();
    };
    for (const auto& l : lines) {
        if (auto en = match_enumerator(l)) {
            close();
            if (!en->number) en->number = last_index + 1;
            open = std::move(*en);
            continue;
        }
        const auto t = text::normalize_whitespace(l);
        if (t.empty()) {
            close();
        } else if (open) {
            open->rest += ' ';
            open->rest += t;
        } else {
            block.unparsed_lines.push_back(t);
        }
    }
    close();
    return block;
}

ParsedReference parse_ama_reference(std::string_view raw, std::size_t ref_index) {
    ParsedReference ref;
    ref.ref_index = ref_index;
    ref.raw_text = std::string(raw);
    if (ref_index < 1) throw ValidationError("invalid_ref_index", "ref_index must be >= 1");
    if (text::trim(raw).empty()) throw ValidationError("empty_reference", "reference text is empty");

    std::string s = text::normalize_whitespace(raw);
    std::erase(s, '*');

    // Identifiers first: they contain periods that would confuse segmentation.
    static const std::regex doi_re(R"((?:doi:\s*|https?://(?:dx\.)?doi\.org/)(10\.\d{4,9}/\S+))",
                                   std::regex::icase | std::regex::optimize);
    static const std::regex url_re(R"(https?://\S+)", std::regex::icase | std::regex::optimize);
    static const std::regex bare_doi_re(R"(\b(10\.\d{4,9}/\S+))", std::regex::optimize);
    static const std::regex pmid_re(R"(\b(?:PMID|PMCID):\s*\S+)", std::regex::icase | std::regex::optimize);
    std::smatch m;
    if (std::regex_search(s, m, doi_re) || std::regex_search(s, m, bare_doi_re)) {
        ref.doi_or_url = strip_trailing(m[1].str(), ".,;)");
        erase_match(s, m);
    } else if (std::regex_search(s, m, url_re)) {
        ref.doi_or_url = strip_trailing(m[0].str(), ".,;)");
        erase_match(s, m);
    }
    while (std::regex_search(s, m, pmid_re)) erase_match(s, m);
    s = text::normalize_whitespace(s);

    // Authors.
    std::string rest = s;
    {
        const auto dot = s.find(". ");
        const auto cut = dot != std::string::npos ? dot : (s.ends_with('.') ? s.size() - 1 : std::string::npos);
        if (cut != std::string::npos) {
            const auto candidate = s.substr(0, cut);
            std::vector<std::string> tokens;
            for (const auto& t : text::split(candidate, ',')) tokens.emplace_back(text::trim(t));
            bool ok = !tokens.empty();
            bool et_al = false;
            for (std::size_t i = 0; ok && i < tokens.size(); ++i) {
                if (i + 1 == tokens.size() && i > 0 && is_et_al(tokens[i])) {
                    et_al = true;
                } else if (!is_author_token(tokens[i])) {
                    ok = false;
                }
            }
            if (ok) {
                ref.et_al = et_al;
                for (auto& t : tokens) {
                    if (!is_et_al(t)) ref.authors.push_back(std::move(t));
                }
                rest = cut < s.size() ? s.substr(cut + 1) : std::string{};
            }
        }
    }

    auto segs = sentence_segments(rest);
    bool leftover = false;
    if (!segs.empty()) {
        ref.title = segs.front();
        segs.erase(segs.begin());
    }

    static const std::regex year_re(R"((?:^|[^\d])((?:18|19|20)\d{2})(?=[^\d]|$))", std::regex::optimize);
    static const std::regex date_lead_re(R"(^(?:Published|Updated|Epub|Posted)\b\s*)",
                                         std::regex::icase | std::regex::optimize);
    static const std::regex place_re(R"(^[^:;]+,\s*[A-Z]{2}:\s*)", std::regex::optimize);
    static const std::regex vip_re(R"(^\s*(?:[A-Za-z]{3,9}\.?(?:\s+\d{1,2}(?:-\d{1,2})?)?)?\s*[;:]\s*(.+)$)",
                                   std::regex::optimize);
    auto is_accessed = [](const std::string& seg) { return text::starts_with_icase(seg, "accessed"); };

    std::optional<std::size_t> year_seg;
    for (std::size_t j = 0; j < segs.size(); ++j) {
        if (is_accessed(segs[j])) continue;
        if (std::regex_search(segs[j], m, year_re)) {
            year_seg = j;
            break;
        }
    }

    if (year_seg) {
        const auto& seg = segs[*year_seg];
        std::regex_search(seg, m, year_re);
        ref.year = std::stoi(m[1].str());
        const auto year_pos = static_cast<std::size_t>(m.position(1));
        auto before = strip_trailing(std::string(text::trim(seg.substr(0, year_pos))), ";,: (");
        const auto after = seg.substr(year_pos + 4);
        const bool dated = std::regex_search(before, date_lead_re);
        if (dated) before.clear();
        before = std::regex_replace(before, place_re, "");

        if (*year_seg == 0) {
            if (!before.empty()) ref.journal_or_source = before;
        } else {
            ref.journal_or_source = segs[0];
            for (std::size_t j = 1; j < *year_seg; ++j) {
                if (!is_accessed(segs[j])) leftover = true;
            }
            if (!before.empty() && !dated) leftover = true;
        }
        std::smatch vm;
        const std::string after_s = after;
        if (std::regex_match(after_s, vm, vip_re)) {
            auto vip = strip_trailing(std::string(text::trim(vm[1].str())), ". ");
            if (!vip.empty()) ref.volume_issue_pages = vip;
        }
        for (std::size_t j = *year_seg + 1; j < segs.size(); ++j) {
            if (!is_accessed(segs[j])) leftover = true;
        }
    } else if (!segs.empty()) {
        ref.journal_or_source = segs[0];
        for (std::size_t j = 1; j < segs.size(); ++j) {
            if (!is_accessed(segs[j])) leftover = true;
        }
    }

    const bool complete = !ref.title.empty() && ref.journal_or_source.has_value() && !leftover;
    ref.status = complete ? ParseStatus::Parsed : ParseStatus::Partial;
    return ref;
}

ReferenceBlock parse_reference_block(std::string_view answer_text) {
    auto block = extract_reference_block(answer_text);
    for (auto& e : block.entries) e = parse_ama_reference(e.raw_text, e.ref_index);
    return block;
}

std::vector<ParsedReference> top_n_references(const ReferenceBlock& block, std::size_t n) {
    if (n < 1) throw ValidationError("invalid_n", "n must be >= 1");
    auto entries = block.entries;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const ParsedReference& a, const ParsedReference& b) { return a.ref_index < b.ref_index; });
    if (entries.size() > n) entries.resize(n);
    return entries;
}

std::string render_reference_block(const ReferenceBlock& block) {
    std::string out = "References:\n";
    for (const auto& e : block.entries) {
        out += std::to_string(e.ref_index) + ". " + e.raw_text + "\n";
    }
    return out;
}

}  // namespace evr
