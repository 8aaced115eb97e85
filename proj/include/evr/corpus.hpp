#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evr/io.hpp"
#include "evr/tokenizer.hpp"

namespace evr {

enum class SourceKind { JournalAbstract, PracticePatternPage, WikiArticle };

std::string_view to_string(SourceKind kind);
SourceKind parse_source_kind(std::string_view s);

struct Document {
    std::string doc_id;
    SourceKind source_kind = SourceKind::JournalAbstract;
    std::string title;
    std::vector<std::string> authors;  // "Surname Initials"
    std::string venue;
    std::optional<int> year;
    std::optional<std::string> doi;
    std::optional<std::string> url;
    std::optional<std::string> volume_issue_pages;
    std::string body;  // whitespace-normalized

    bool operator==(const Document&) const = default;
};

json to_json(const Document& doc);
Document document_from_json(const json& j);

struct Snippet {
    std::string snippet_id;
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;
    std::size_t token_count = 0;
};

struct Rejection {
    std::size_t record = 0;  // 0-based position in the input stream
    std::string reason;      // stable code, e.g. "missing_year"
    std::string detail;

    json to_json() const;
};

struct IngestResult {
    std::vector<Document> documents;
    std::vector<Rejection> rejections;
};

// A journal abstract as it arrives from upstream extraction. Every field may
// be blank; year is kept as text so that unparseable values can be reported.
struct RawAbstractRecord {
    std::string title;
    std::string venue;
    std::string year;
    std::vector<std::string> authors;
    std::string doi;
    std::string url;
    std::string volume_issue_pages;
    std::string body;
};

struct WikiPage {
    std::string title;
    std::string body;
    std::string url;
};

// QC gate for journal abstracts: blank title/venue/year, a year outside
// 1800..current_year+1, or an empty abstract are rejected, never fatal.
IngestResult ingest_journal_abstracts(const std::vector<RawAbstractRecord>& records, int current_year);

// One document per non-empty page. Titles carry the 1-based page number of
// the source page. Throws ValidationError("empty_guideline") if every page is
// blank.
IngestResult ingest_guideline_pages(std::string_view guideline_title, const std::vector<std::string>& pages);

// Duplicate titles collapse to the page with the longest body, placed at the
// position of the first occurrence.
IngestResult ingest_wiki_articles(const std::vector<WikiPage>& pages);

struct CatalogManifest {
    std::map<SourceKind, std::size_t> counts;
    std::size_t rejected_count = 0;
    std::string ingest_timestamp;

    std::size_t total() const;
    json to_json() const;
};

// Ordered, id-addressable set of documents. Immutable once built; readers
// may share it across threads.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<Document> docs);

    void add(Document doc);

    const std::vector<Document>& documents() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const Document* find(std::string_view doc_id) const;
    const Document& at(std::string_view doc_id) const;

    CatalogManifest manifest(std::size_t rejected_count, std::string timestamp) const;

    // Order-sensitive digest of doc ids; stored in run manifests to detect
    // a run being scored against a different catalog.
    std::string fingerprint() const;

    std::string to_jsonl() const;
    static Catalog load(const std::filesystem::path& path);

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// Mixed-source ingestion of line-oriented JSON records (`type` is one of
// journal_abstract, practice_pattern, wiki_article). Malformed records are
// rejected with a reason code; the output keeps input order.
struct CatalogBuild {
    Catalog catalog;
    std::vector<Rejection> rejections;
};
CatalogBuild ingest_records(const std::vector<json>& records, int current_year);

// Parses a JSONL stream leniently: lines that fail to parse become
// "malformed_json" rejections instead of aborting.
CatalogBuild ingest_jsonl_text(std::string_view content, int current_year);

inline constexpr std::size_t kDefaultMaxSnippetTokens = 1024;

// Splits the normalized body on token-piece boundaries into snippets of at
// most max_tokens. Each snippet spans from its first piece up to the first
// piece of the next snippet, so plain concatenation reproduces the body.
std::vector<Snippet> chunk_document(const Document& doc, std::size_t max_tokens, const Tokenizer& tokenizer);

std::vector<Snippet> chunk_catalog(const Catalog& catalog, std::size_t max_tokens, const Tokenizer& tokenizer);

std::string make_snippet_id(std::string_view doc_id, std::size_t ordinal);

// Snippet lookup by id, e.g. to recover the text behind a retrieval hit.
class SnippetStore {
public:
    SnippetStore() = default;
    explicit SnippetStore(std::vector<Snippet> snippets);

    const Snippet* find(std::string_view snippet_id) const;
    const std::vector<Snippet>& snippets() const { return snippets_; }
    std::size_t size() const { return snippets_.size(); }

private:
    std::vector<Snippet> snippets_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace evr
