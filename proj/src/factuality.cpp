#include "evr/factuality.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "evr/error.hpp"
#include "evr/text.hpp"

#ifndef EVR_SHARE_DIR
#define EVR_SHARE_DIR "data"
#endif

namespace evr {

namespace {

std::vector<std::string> token_set(std::string_view normalized) {
    std::vector<std::string> toks;
    for (auto& t : text::split(normalized, ' ')) {
        if (!t.empty()) toks.push_back(std::move(t));
    }
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    return toks;
}

std::u32string code_points(std::string_view s) {
    std::u32string out;
    std::size_t pos = 0;
    while (pos < s.size()) out.push_back(text::decode_utf8(s, pos));
    return out;
}

std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string surname(std::string_view author) {
    auto words = text::split(text::trim(author), ' ');
    if (words.size() > 1) words.pop_back();  // initials
    return normalize_title(text::join(words, " "));
}

std::string bare_doi(std::string_view s) {
    auto t = text::to_lower_ascii(text::trim(s));
    for (std::string_view prefix : {"https://doi.org/", "http://doi.org/", "https://dx.doi.org/",
                                    "http://dx.doi.org/", "doi:"}) {
        if (t.starts_with(prefix)) {
            t.erase(0, prefix.size());
            break;
        }
    }
    return std::string(text::trim(t));
}

// Normalized venue with connective words dropped, so "X and Y" and "X & Y"
// compare equal.
std::string venue_key(std::string_view venue) {
    std::vector<std::string> kept;
    for (auto& w : text::split(normalize_title(venue), ' ')) {
        if (w.empty() || w == "the" || w == "and" || w == "of" || w == "for" || w == "in") continue;
        kept.push_back(std::move(w));
    }
    return text::join(kept, " ");
}

std::string squash_spaces(std::string_view s) {
    std::string out;
    for (const char c : s) {
        if (c != ' ') out.push_back(c);
    }
    return out;
}

}  // namespace

std::string_view to_string(Discrepancy d) {
    switch (d) {
        case Discrepancy::YearMismatch: return "year_mismatch";
        case Discrepancy::VenueMismatch: return "venue_mismatch";
        case Discrepancy::AuthorMismatch: return "author_mismatch";
        case Discrepancy::VolumePagesMismatch: return "volume_pages_mismatch";
        case Discrepancy::DoiMismatch: return "doi_mismatch";
    }
    return "unknown";
}

Discrepancy parse_discrepancy(std::string_view s) {
    for (const auto d : {Discrepancy::YearMismatch, Discrepancy::VenueMismatch, Discrepancy::AuthorMismatch,
                         Discrepancy::VolumePagesMismatch, Discrepancy::DoiMismatch}) {
        if (to_string(d) == s) return d;
    }
    throw ValidationError("invalid_discrepancy", "unknown discrepancy '" + std::string(s) + "'");
}

std::string_view to_string(FactualityLabel l) {
    switch (l) {
        case FactualityLabel::Correct: return "correct";
        case FactualityLabel::MinorError: return "minor_error";
        case FactualityLabel::Hallucinated: return "hallucinated";
        case FactualityLabel::OutOfCorpus: return "out_of_corpus";
    }
    return "unknown";
}

FactualityLabel parse_label(std::string_view s) {
    for (const auto l : kAllLabels) {
        if (to_string(l) == s) return l;
    }
    throw ValidationError("invalid_label", "unknown factuality label '" + std::string(s) + "'");
}

std::string normalize_title(std::string_view title) {
    std::string out;
    out.reserve(title.size());
    bool pending_space = false;
    auto put = [&](std::string_view piece) {
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.append(piece);
    };
    std::size_t pos = 0;
    while (pos < title.size()) {
        const std::size_t start = pos;
        const char32_t cp = text::decode_utf8(title, pos);
        if (cp < 0x80) {
            const auto c = static_cast<unsigned char>(cp);
            if (std::isalnum(c)) {
                const char lower = static_cast<char>(std::tolower(c));
                put(std::string_view(&lower, 1));
            } else {
                pending_space = true;
            }
            continue;
        }
        if (cp >= 0x0300 && cp <= 0x036F) continue;  // combining marks of decomposed letters
        if (const auto folded = text::fold_diacritic(cp); !folded.empty()) {
            put(folded);
            continue;
        }
        // Latin-1 punctuation and symbols, general punctuation, spaces,
        // and anything undecodable separate words.
        const bool separator = (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
                               (cp >= 0x2000 && cp <= 0x206F) || cp == 0x3000 || cp == 0xFFFD ||
                               text::is_space(cp) || text::is_control(cp);
        if (separator) {
            pending_space = true;
        } else {
            put(title.substr(start, pos - start));
        }
    }
    return out;
}

double title_similarity(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    const auto ta = token_set(a);
    const auto tb = token_set(b);
    std::vector<std::string> inter;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
    const std::size_t uni = ta.size() + tb.size() - inter.size();
    const double jaccard = uni == 0 ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
    const auto ca = code_points(a);
    const auto cb = code_points(b);
    const std::size_t longest = std::max(ca.size(), cb.size());
    const double edit = longest == 0 ? 1.0 : 1.0 - static_cast<double>(levenshtein(ca, cb)) / static_cast<double>(longest);
    return 0.5 * jaccard + 0.5 * edit;
}

void VenueTable::add(std::string_view abbreviation, std::string_view full_name) {
    table_[venue_key(abbreviation)] = venue_key(full_name);
}

VenueTable VenueTable::load(const std::filesystem::path& path) {
    VenueTable t;
    for (const auto& line : text::split_lines(read_file(path))) {
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tab = trimmed.find('\t');
        if (tab == std::string_view::npos) {
            throw ValidationError("malformed_venue_table", "expected 'abbreviation<TAB>full name': " + std::string(trimmed));
        }
        t.add(text::trim(trimmed.substr(0, tab)), text::trim(trimmed.substr(tab + 1)));
    }
    return t;
}

std::string VenueTable::canonical(std::string_view venue) const {
    auto n = venue_key(venue);
    const auto it = table_.find(n);
    return it == table_.end() ? n : it->second;
}

std::filesystem::path default_venue_table_path() {
    return std::filesystem::path(EVR_SHARE_DIR) / "venue_abbreviations.tsv";
}

ReferenceMatcher::ReferenceMatcher(const Catalog& catalog, VenueTable venues, double theta)
    : catalog_(&catalog), venues_(std::move(venues)), theta_(theta) {
    if (!(theta_ >= 0.0 && theta_ <= 1.0)) throw ValidationError("invalid_theta", "theta must lie in [0, 1]");
    std::unordered_map<std::string, std::size_t> seen;  // "g|" or "t|" + key -> key id
    const auto& docs = catalog.documents();
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const bool guideline = docs[i].source_kind == SourceKind::PracticePatternPage;
        auto key = normalize_title(guideline ? docs[i].venue : docs[i].title);
        if (key.empty()) continue;
        auto tag = std::string(guideline ? "g|" : "t|") + key;
        if (seen.contains(tag)) continue;
        seen.emplace(std::move(tag), keys_.size());
        for (const auto& tok : token_set(key)) postings_[tok].push_back(keys_.size());
        keys_.push_back({std::move(key), i, guideline});
    }
}

std::pair<std::optional<std::size_t>, double> ReferenceMatcher::best_key(const std::string& query,
                                                                          bool guideline_only) const {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    auto consider = [&](std::size_t k) {
        if (guideline_only && !keys_[k].guideline) return;
        const double s = title_similarity(query, keys_[k].normalized);
        // Keys are visited in ascending order, so ties keep the earliest.
        if (!best || s > best_score) {
            best = k;
            best_score = s;
        }
    };
    if (query.empty()) return {std::nullopt, 0.0};
    if (theta_ > 0.5) {
        // A key sharing no token has Jaccard 0, so its blended score is at
        // most 0.5 and can never clear theta.
        std::vector<std::size_t> cands;
        for (const auto& tok : token_set(query)) {
            const auto it = postings_.find(tok);
            if (it != postings_.end()) cands.insert(cands.end(), it->second.begin(), it->second.end());
        }
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        for (const auto k : cands) consider(k);
    } else {
        for (std::size_t k = 0; k < keys_.size(); ++k) consider(k);
    }
    return {best, best_score};
}

std::vector<Discrepancy> ReferenceMatcher::compare_fields(const ParsedReference& ref, const Document& doc) const {
    std::vector<Discrepancy> out;
    if (ref.year && doc.year && *ref.year != *doc.year) out.push_back(Discrepancy::YearMismatch);
    if (doc.source_kind == SourceKind::JournalAbstract && ref.journal_or_source && !doc.venue.empty() &&
        venues_.canonical(*ref.journal_or_source) != venues_.canonical(doc.venue)) {
        out.push_back(Discrepancy::VenueMismatch);
    }
    if (!ref.authors.empty() && !doc.authors.empty() && surname(ref.authors.front()) != surname(doc.authors.front())) {
        out.push_back(Discrepancy::AuthorMismatch);
    }
    if (ref.volume_issue_pages && doc.volume_issue_pages &&
        squash_spaces(*ref.volume_issue_pages) != squash_spaces(*doc.volume_issue_pages)) {
        out.push_back(Discrepancy::VolumePagesMismatch);
    }
    if (ref.doi_or_url && doc.doi) {
        const auto cited = bare_doi(*ref.doi_or_url);
        if (cited.starts_with("10.") && cited != bare_doi(*doc.doi)) out.push_back(Discrepancy::DoiMismatch);
    }
    return out;
}

MatchEvidence ReferenceMatcher::match(const ParsedReference& ref) const {
    MatchEvidence ev;
    const auto title = normalize_title(ref.title);
    auto [best, score] = best_key(title, false);
    if (ref.journal_or_source) {
        // Guideline citations often put the guideline name in the source slot.
        const auto [g_best, g_score] = best_key(normalize_title(*ref.journal_or_source), true);
        if (g_best && (g_score > score || (g_score == score && best && *g_best < *best))) {
            best = g_best;
            score = g_score;
        }
    }
    ev.title_similarity = score;
    if (best && score >= theta_) {
        const auto& doc = catalog_->documents()[keys_[*best].doc];
        ev.matched_doc_id = doc.doc_id;
        ev.field_discrepancies = compare_fields(ref, doc);
    }
    return ev;
}

MatchEvidence match_reference(const ParsedReference& ref, const ReferenceMatcher& matcher) {
    return matcher.match(ref);
}

FactualityLabel classify_reference(const MatchEvidence& evidence) {
    if (!evidence.matched_doc_id) return FactualityLabel::Hallucinated;
    return evidence.field_discrepancies.empty() ? FactualityLabel::Correct : FactualityLabel::MinorError;
}

CatalogResolver::CatalogResolver(Catalog records, VenueTable venues, double theta)
    : records_(std::make_unique<Catalog>(std::move(records))), matcher_(*records_, std::move(venues), theta) {}

bool CatalogResolver::resolves(const ParsedReference& ref) const {
    return matcher_.match(ref).matched_doc_id.has_value();
}

FactualityVerdict verify_reference(const ParsedReference& ref, const ReferenceMatcher& matcher,
                                   const ExternalResolver* external) {
    FactualityVerdict v;
    v.reference = ref;
    v.evidence = matcher.match(ref);
    v.label = classify_reference(v.evidence);
    if (v.label == FactualityLabel::Hallucinated && external && external->resolves(ref)) {
        v.label = FactualityLabel::OutOfCorpus;
    }
    return v;
}

json to_json(const FactualityVerdict& v) {
    json disc = json::array();
    for (const auto d : v.evidence.field_discrepancies) disc.push_back(to_string(d));
    return json{{"reference", to_json(v.reference)},
                {"label", to_string(v.label)},
                {"title_similarity", v.evidence.title_similarity},
                {"discrepancies", disc},
                {"matched_doc_id", v.evidence.matched_doc_id ? json(*v.evidence.matched_doc_id) : json(nullptr)}};
}

FactualityVerdict verdict_from_json(const json& j) {
    FactualityVerdict v;
    v.reference = reference_from_json(j.at("reference"));
    v.label = parse_label(j.at("label").get<std::string>());
    v.evidence.title_similarity = j.at("title_similarity").get<double>();
    for (const auto& d : j.at("discrepancies")) v.evidence.field_discrepancies.push_back(parse_discrepancy(d.get<std::string>()));
    if (j.at("matched_doc_id").is_string()) v.evidence.matched_doc_id = j["matched_doc_id"].get<std::string>();
    return v;
}

std::size_t LabelCounts::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::optional<std::array<int, 4>> LabelCounts::percent_tenths() const {
    const auto n = total();
    if (n == 0) return std::nullopt;
    std::array<int, 4> tenths{};
    std::array<std::size_t, 4> remainder{};
    int assigned = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        tenths[i] = static_cast<int>(counts[i] * 1000 / n);
        remainder[i] = counts[i] * 1000 % n;
        assigned += tenths[i];
    }
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (int k = 0; assigned < 1000; ++k, ++assigned) ++tenths[order[static_cast<std::size_t>(k)]];
    return tenths;
}

namespace {

json counts_json(const LabelCounts& c) {
    json counts = json::object();
    json pct = json::object();
    const auto tenths = c.percent_tenths();
    for (const auto l : kAllLabels) {
        const auto key = std::string(to_string(l));
        counts[key] = c[l];
        pct[key] = tenths ? json((*tenths)[static_cast<std::size_t>(l)] / 10.0) : json(nullptr);
    }
    return json{{"total", c.total()}, {"counts", counts}, {"percentages", pct},
                {"percentages_defined", tenths.has_value()}};
}

std::string cell(const LabelCounts& c, FactualityLabel l) {
    const auto tenths = c.percent_tenths();
    char buf[48];
    if (!tenths) {
        std::snprintf(buf, sizeof buf, "%zu (n/a)", c[l]);
    } else {
        const int t = (*tenths)[static_cast<std::size_t>(l)];
        std::snprintf(buf, sizeof buf, "%zu (%d.%d%%)", c[l], t / 10, t % 10);
    }
    return buf;
}

}  // namespace

json FactualityReport::to_json() const {
    json modes = json::object();
    for (const auto& [mode, c] : by_mode) modes[std::string(evr::to_string(mode))] = counts_json(c);
    return json{{"kind", "factuality"}, {"theta", theta}, {"overall", counts_json(overall)}, {"by_mode", modes}};
}

std::string FactualityReport::to_text() const {
    std::ostringstream os;
    char head[160];
    std::snprintf(head, sizeof head, "Factuality of references (theta = %.2f)\n", theta);
    os << head;
    std::vector<std::pair<std::string, const LabelCounts*>> columns;
    for (const auto mode : kAllModes) {
        const auto it = by_mode.find(mode);
        if (it != by_mode.end()) columns.emplace_back(mode == Mode::Rag ? "With RAG" : "Without RAG", &it->second);
    }
    columns.emplace_back("Overall", &overall);
    char line[256];
    std::string row;
    std::snprintf(line, sizeof line, "%-16s", "Category");
    row = line;
    for (const auto& [name, _] : columns) {
        std::snprintf(line, sizeof line, "%-18s", name.c_str());
        row += line;
    }
    os << text::trim(row) << '\n';
    const bool show_ooc = overall[FactualityLabel::OutOfCorpus] > 0;
    for (const auto l : kAllLabels) {
        if (l == FactualityLabel::OutOfCorpus && !show_ooc) continue;
        const char* name = l == FactualityLabel::Correct        ? "Correct"
                           : l == FactualityLabel::MinorError   ? "Minor error"
                           : l == FactualityLabel::Hallucinated ? "Hallucinated"
                                                                : "Out of corpus";
        std::snprintf(line, sizeof line, "%-16s", name);
        row = line;
        for (const auto& [_, c] : columns) {
            std::snprintf(line, sizeof line, "%-18s", cell(*c, l).c_str());
            row += line;
        }
        os << text::trim(row) << '\n';
    }
    std::snprintf(line, sizeof line, "%-16s", "Total");
    row = line;
    for (const auto& [_, c] : columns) {
        std::snprintf(line, sizeof line, "%-18zu", c->total());
        row += line;
    }
    os << text::trim(row) << '\n';
    return os.str();
}

FactualityReport factuality_report_from_counts(const std::map<Mode, LabelCounts>& counts, double theta) {
    FactualityReport r;
    r.theta = theta;
    for (const auto& [mode, c] : counts) {
        r.by_mode[mode] = c;
        for (const auto l : kAllLabels) r.overall[l] += c[l];
    }
    return r;
}

FactualityReport factuality_report(const std::map<Mode, std::vector<FactualityVerdict>>& verdicts, double theta) {
    std::map<Mode, LabelCounts> counts;
    for (const auto& [mode, vs] : verdicts) {
        auto& c = counts[mode];
        for (const auto& v : vs) ++c[v.label];
    }
    return factuality_report_from_counts(counts, theta);
}

}  // namespace evr
