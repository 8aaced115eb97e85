#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evr/corpus.hpp"
#include "evr/mode.hpp"
#include "evr/references.hpp"

namespace evr {

enum class Discrepancy { YearMismatch, VenueMismatch, AuthorMismatch, VolumePagesMismatch, DoiMismatch };

std::string_view to_string(Discrepancy d);
Discrepancy parse_discrepancy(std::string_view s);

// OutOfCorpus is only produced when an external resolver is configured; it
// is reported in its own bucket.
enum class FactualityLabel { Correct, MinorError, Hallucinated, OutOfCorpus };

inline constexpr std::array<FactualityLabel, 4> kAllLabels = {
    FactualityLabel::Correct, FactualityLabel::MinorError, FactualityLabel::Hallucinated,
    FactualityLabel::OutOfCorpus};

std::string_view to_string(FactualityLabel l);
FactualityLabel parse_label(std::string_view s);

struct MatchEvidence {
    std::optional<std::string> matched_doc_id;
    double title_similarity = 0.0;
    std::vector<Discrepancy> field_discrepancies;

    bool operator==(const MatchEvidence&) const = default;
};

struct FactualityVerdict {
    ParsedReference reference;
    MatchEvidence evidence;
    FactualityLabel label = FactualityLabel::Hallucinated;
};

// Lowercase, punctuation to spaces, whitespace collapsed, Latin diacritics
// folded whether precomposed or combining. Idempotent.
std::string normalize_title(std::string_view title);

// 0.5 * token-set Jaccard + 0.5 * (1 - levenshtein / max_length), over
// already-normalized strings. Two empty strings score 1.
double title_similarity(std::string_view normalized_a, std::string_view normalized_b);

// AMA journal abbreviations to full names, compared in normalized form.
class VenueTable {
public:
    void add(std::string_view abbreviation, std::string_view full_name);
    // Tab-separated "abbreviation<TAB>full name" lines; '#' starts a comment.
    static VenueTable load(const std::filesystem::path& path);

    // Normalized full name (connective words dropped) when the venue is a
    // known abbreviation, otherwise the same normalization of the venue.
    std::string canonical(std::string_view venue) const;
    std::size_t size() const { return table_.size(); }

private:
    std::unordered_map<std::string, std::string> table_;
};

// Default location of the shipped abbreviation table.
std::filesystem::path default_venue_table_path();

inline constexpr double kDefaultExistenceThreshold = 0.85;

// Candidate lookup over an immutable catalog. Journal abstracts and wiki
// articles are keyed by title; guideline pages by their guideline title
// (venue), compared against both the cited title and the cited source.
class ReferenceMatcher {
public:
    ReferenceMatcher(const Catalog& catalog, VenueTable venues, double theta = kDefaultExistenceThreshold);

    double theta() const { return theta_; }
    const Catalog& catalog() const { return *catalog_; }

    MatchEvidence match(const ParsedReference& ref) const;

private:
    struct Key {
        std::string normalized;
        std::size_t doc;  // first catalog position carrying this key
        bool guideline;
    };

    std::pair<std::optional<std::size_t>, double> best_key(const std::string& query, bool guideline_only) const;
    std::vector<Discrepancy> compare_fields(const ParsedReference& ref, const Document& doc) const;

    const Catalog* catalog_;
    VenueTable venues_;
    double theta_;
    std::vector<Key> keys_;
    std::unordered_map<std::string, std::vector<std::size_t>> postings_;  // token -> key ids
};

MatchEvidence match_reference(const ParsedReference& ref, const ReferenceMatcher& matcher);

// Correct iff matched with no discrepancies, MinorError iff matched with
// discrepancies, Hallucinated iff unmatched.
FactualityLabel classify_reference(const MatchEvidence& evidence);

// Optional lookup beyond the local catalog (off unless configured).
class ExternalResolver {
public:
    virtual ~ExternalResolver() = default;
    virtual bool resolves(const ParsedReference& ref) const = 0;
};

// Resolves against a second catalog of bibliographic records using the same
// similarity and threshold.
class CatalogResolver final : public ExternalResolver {
public:
    CatalogResolver(Catalog records, VenueTable venues, double theta);
    bool resolves(const ParsedReference& ref) const override;

private:
    std::unique_ptr<Catalog> records_;
    ReferenceMatcher matcher_;
};

FactualityVerdict verify_reference(const ParsedReference& ref, const ReferenceMatcher& matcher,
                                   const ExternalResolver* external = nullptr);

json to_json(const FactualityVerdict& v);
FactualityVerdict verdict_from_json(const json& j);

struct LabelCounts {
    std::array<std::size_t, 4> counts{};  // indexed by FactualityLabel

    std::size_t total() const;
    std::size_t& operator[](FactualityLabel l) { return counts[static_cast<std::size_t>(l)]; }
    std::size_t operator[](FactualityLabel l) const { return counts[static_cast<std::size_t>(l)]; }

    // Percentages in tenths, rounded by largest remainder so they always sum
    // to exactly 100.0; absent when total is 0.
    std::optional<std::array<int, 4>> percent_tenths() const;
};

struct FactualityReport {
    double theta = kDefaultExistenceThreshold;
    LabelCounts overall;
    std::map<Mode, LabelCounts> by_mode;

    json to_json() const;
    std::string to_text() const;
};

FactualityReport factuality_report(const std::map<Mode, std::vector<FactualityVerdict>>& verdicts, double theta);
FactualityReport factuality_report_from_counts(const std::map<Mode, LabelCounts>& counts, double theta);

}  // namespace evr
