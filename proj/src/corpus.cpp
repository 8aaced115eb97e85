#include "evr/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "evr/error.hpp"
#include "evr/text.hpp"

namespace evr {

namespace {

std::string make_doc_id(std::string_view prefix, std::string_view venue, std::string_view title,
                        std::optional<int> year, std::size_t ordinal) {
    std::string key;
    key.append(venue).push_back('\x1f');
    key.append(title).push_back('\x1f');
    key.append(year ? std::to_string(*year) : "").push_back('\x1f');
    key.append(std::to_string(ordinal));
    return std::string(prefix) + hex64(stable_hash(key));
}

std::optional<std::string> opt_field(const std::string& s) {
    auto t = std::string(text::trim(s));
    if (t.empty()) return std::nullopt;
    return t;
}

// Lenient scalar -> text for upstream records (numbers become their decimal
// form, null and missing become "").
std::string field_text(const json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        const auto it = obj.find(k);
        if (it == obj.end() || it->is_null()) continue;
        if (it->is_string()) return it->get<std::string>();
        if (it->is_number_integer()) return std::to_string(it->get<long long>());
        if (it->is_number()) return it->dump();
        return it->dump();
    }
    return {};
}

std::vector<std::string> string_list(const json& obj, const char* key) {
    std::vector<std::string> out;
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) return out;
    for (const auto& v : *it) {
        if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

std::string_view to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::JournalAbstract: return "journal_abstract";
        case SourceKind::PracticePatternPage: return "practice_pattern_page";
        case SourceKind::WikiArticle: return "wiki_article";
    }
    return "unknown";
}

SourceKind parse_source_kind(std::string_view s) {
    if (s == "journal_abstract") return SourceKind::JournalAbstract;
    if (s == "practice_pattern_page") return SourceKind::PracticePatternPage;
    if (s == "wiki_article") return SourceKind::WikiArticle;
    throw ValidationError("unknown_source_kind", "unknown source kind '" + std::string(s) + "'");
}

json to_json(const Document& doc) {
    json j;
    j["doc_id"] = doc.doc_id;
    j["source_kind"] = to_string(doc.source_kind);
    j["title"] = doc.title;
    j["authors"] = doc.authors;
    j["venue"] = doc.venue;
    j["year"] = doc.year ? json(*doc.year) : json(nullptr);
    j["doi"] = doc.doi ? json(*doc.doi) : json(nullptr);
    j["url"] = doc.url ? json(*doc.url) : json(nullptr);
    j["volume_issue_pages"] = doc.volume_issue_pages ? json(*doc.volume_issue_pages) : json(nullptr);
    j["body"] = doc.body;
    return j;
}

Document document_from_json(const json& j) {
    Document d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.source_kind = parse_source_kind(j.at("source_kind").get<std::string>());
    d.title = j.value("title", "");
    d.authors = j.value("authors", std::vector<std::string>{});
    d.venue = j.value("venue", "");
    if (j.contains("year") && !j["year"].is_null()) d.year = j["year"].get<int>();
    for (auto [key, field] : {std::pair{"doi", &d.doi}, {"url", &d.url}, {"volume_issue_pages", &d.volume_issue_pages}}) {
        if (j.contains(key) && j[key].is_string()) *field = j[key].get<std::string>();
    }
    d.body = j.at("body").get<std::string>();
    return d;
}

json Rejection::to_json() const {
    return json{{"record", record}, {"reason", reason}, {"detail", detail}};
}

IngestResult ingest_journal_abstracts(const std::vector<RawAbstractRecord>& records, int current_year) {
    IngestResult out;
    std::unordered_map<std::string, std::size_t> occurrences;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto title = text::normalize_whitespace(r.title);
        const auto venue = text::normalize_whitespace(r.venue);
        const auto year_text = std::string(text::trim(r.year));
        const auto body = text::normalize_whitespace(r.body);

        auto reject = [&](const char* reason, std::string detail) {
            out.rejections.push_back({i, reason, std::move(detail)});
        };
        if (title.empty()) { reject("missing_title", ""); continue; }
        if (venue.empty()) { reject("missing_venue", title); continue; }
        if (year_text.empty()) { reject("missing_year", title); continue; }
        int year = 0;
        const auto [ptr, ec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), year);
        if (ec != std::errc{} || ptr != year_text.data() + year_text.size() || year < 1800 ||
            year > current_year + 1) {
            reject("invalid_year", year_text);
            continue;
        }
        if (body.empty()) { reject("empty_body", title); continue; }

        Document d;
        d.source_kind = SourceKind::JournalAbstract;
        d.title = title;
        for (const auto& a : r.authors) {
            auto n = text::normalize_whitespace(a);
            if (!n.empty()) d.authors.push_back(std::move(n));
        }
        d.venue = venue;
        d.year = year;
        d.doi = opt_field(r.doi);
        d.url = opt_field(r.url);
        d.volume_issue_pages = opt_field(r.volume_issue_pages);
        d.body = body;
        const auto key = venue + '\x1f' + title + '\x1f' + year_text;
        d.doc_id = make_doc_id("pm-", venue, title, year, occurrences[key]++);
        out.documents.push_back(std::move(d));
    }
    return out;
}

IngestResult ingest_guideline_pages(std::string_view guideline_title, const std::vector<std::string>& pages) {
    IngestResult out;
    const auto venue = text::normalize_whitespace(guideline_title);
    if (venue.empty()) throw ValidationError("missing_title", "guideline has no title");
    for (std::size_t i = 0; i < pages.size(); ++i) {
        auto body = text::normalize_whitespace(pages[i]);
        const std::size_t page_no = i + 1;
        if (body.empty()) {
            out.rejections.push_back({i, "empty_page", venue + ", page " + std::to_string(page_no)});
            continue;
        }
        Document d;
        d.source_kind = SourceKind::PracticePatternPage;
        d.title = venue + ", page " + std::to_string(page_no);
        d.venue = venue;
        d.body = std::move(body);
        d.doc_id = make_doc_id("ppp-", venue, d.title, std::nullopt, page_no);
        out.documents.push_back(std::move(d));
    }
    if (out.documents.empty()) {
        throw ValidationError("empty_guideline", "every page of '" + venue + "' is empty");
    }
    return out;
}

IngestResult ingest_wiki_articles(const std::vector<WikiPage>& pages) {
    IngestResult out;
    std::unordered_map<std::string, std::size_t> slot_by_title;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const auto title = text::normalize_whitespace(pages[i].title);
        auto body = text::normalize_whitespace(pages[i].body);
        if (title.empty()) {
            out.rejections.push_back({i, "missing_title", ""});
            continue;
        }
        if (body.empty()) {
            out.rejections.push_back({i, "empty_body", title});
            continue;
        }
        const auto it = slot_by_title.find(title);
        if (it != slot_by_title.end()) {
            auto& kept = out.documents[it->second];
            if (body.size() > kept.body.size()) {
                kept.body = std::move(body);
                kept.url = opt_field(pages[i].url);
            }
            out.rejections.push_back({i, "duplicate_title", title});
            continue;
        }
        Document d;
        d.source_kind = SourceKind::WikiArticle;
        d.title = title;
        d.venue = "EyeWiki";
        d.url = opt_field(pages[i].url);
        d.body = std::move(body);
        d.doc_id = make_doc_id("wiki-", d.venue, title, std::nullopt, 0);
        slot_by_title.emplace(title, out.documents.size());
        out.documents.push_back(std::move(d));
    }
    return out;
}

std::size_t CatalogManifest::total() const {
    std::size_t n = 0;
    for (const auto& [k, v] : counts) n += v;
    return n;
}

json CatalogManifest::to_json() const {
    json c = json::object();
    for (const auto kind : {SourceKind::JournalAbstract, SourceKind::PracticePatternPage, SourceKind::WikiArticle}) {
        const auto it = counts.find(kind);
        c[std::string(evr::to_string(kind))] = it == counts.end() ? 0 : it->second;
    }
    return json{{"counts", c}, {"total", total()}, {"rejected_count", rejected_count},
                {"ingest_timestamp", ingest_timestamp}};
}

Catalog::Catalog(std::vector<Document> docs) {
    for (auto& d : docs) add(std::move(d));
}

void Catalog::add(Document doc) {
    if (doc.body.empty()) throw ValidationError("empty_body", "document " + doc.doc_id + " has an empty body");
    if (by_id_.contains(doc.doc_id)) throw ValidationError("duplicate_doc_id", "duplicate doc id " + doc.doc_id);
    by_id_.emplace(doc.doc_id, docs_.size());
    docs_.push_back(std::move(doc));
}

const Document* Catalog::find(std::string_view doc_id) const {
    const auto it = by_id_.find(std::string(doc_id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& Catalog::at(std::string_view doc_id) const {
    const auto* d = find(doc_id);
    if (!d) throw NotFoundError("unknown_doc_id", "doc id " + std::string(doc_id) + " is not in the catalog");
    return *d;
}

CatalogManifest Catalog::manifest(std::size_t rejected_count, std::string timestamp) const {
    CatalogManifest m;
    for (const auto kind : {SourceKind::JournalAbstract, SourceKind::PracticePatternPage, SourceKind::WikiArticle}) {
        m.counts[kind] = 0;
    }
    for (const auto& d : docs_) ++m.counts[d.source_kind];
    m.rejected_count = rejected_count;
    m.ingest_timestamp = std::move(timestamp);
    return m;
}

std::string Catalog::fingerprint() const {
    std::uint64_t h = stable_hash(std::to_string(docs_.size()));
    for (const auto& d : docs_) h = stable_hash(d.doc_id, h);
    return hex64(h);
}

std::string Catalog::to_jsonl() const {
    std::string out;
    for (const auto& d : docs_) {
        out += to_json(d).dump();
        out += '\n';
    }
    return out;
}

Catalog Catalog::load(const std::filesystem::path& path) {
    Catalog c;
    for (const auto& row : read_jsonl(path)) c.add(document_from_json(row));
    return c;
}

namespace {

// Either a parsed record or the rejection reason for its line.
struct Record {
    std::optional<json> value;
    std::string reason;
};

CatalogBuild ingest_parsed(const std::vector<Record>& records, int current_year) {
    // Wiki dedup spans the whole stream, so wiki pages are ingested in one
    // batch and their documents emitted at the record of first occurrence.
    std::vector<WikiPage> wiki_pages;
    std::vector<std::size_t> wiki_record;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i].value;
        if (r && r->is_object() && r->value("type", "") == "wiki_article") {
            wiki_pages.push_back({field_text(*r, {"title"}), field_text(*r, {"body"}), field_text(*r, {"url"})});
            wiki_record.push_back(i);
        }
    }
    auto wiki = ingest_wiki_articles(wiki_pages);
    std::unordered_map<std::size_t, std::size_t> wiki_doc_at;  // record -> wiki doc index
    {
        std::size_t doc = 0;
        std::unordered_map<std::string, bool> seen;
        for (std::size_t p = 0; p < wiki_pages.size() && doc < wiki.documents.size(); ++p) {
            const auto title = text::normalize_whitespace(wiki_pages[p].title);
            if (title.empty() || text::normalize_whitespace(wiki_pages[p].body).empty()) continue;
            if (!seen[title]) {
                seen[title] = true;
                wiki_doc_at[wiki_record[p]] = doc++;
            }
        }
    }

    CatalogBuild out;
    std::vector<RawAbstractRecord> journal_batch;
    std::unordered_map<std::string, std::size_t> journal_occurrences;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (!rec.value) {
            out.rejections.push_back({i, rec.reason, ""});
            continue;
        }
        const json& r = *rec.value;
        if (!r.is_object()) {
            out.rejections.push_back({i, "malformed_record", "record is not a JSON object"});
            continue;
        }
        const auto type = r.value("type", "");
        if (type == "journal_abstract") {
            RawAbstractRecord raw;
            raw.title = field_text(r, {"title"});
            raw.venue = field_text(r, {"venue", "journal"});
            raw.year = field_text(r, {"year"});
            raw.authors = string_list(r, "authors");
            raw.doi = field_text(r, {"doi"});
            raw.url = field_text(r, {"url"});
            raw.volume_issue_pages = field_text(r, {"volume_issue_pages"});
            raw.body = field_text(r, {"body", "abstract"});
            auto res = ingest_journal_abstracts({raw}, current_year);
            for (auto& rej : res.rejections) out.rejections.push_back({i, rej.reason, rej.detail});
            for (auto& d : res.documents) {
                // Re-derive the id with a stream-wide occurrence counter so
                // identical (venue, title, year) keys stay distinct.
                const auto key = d.venue + '\x1f' + d.title + '\x1f' + std::to_string(*d.year);
                d.doc_id = make_doc_id("pm-", d.venue, d.title, d.year, journal_occurrences[key]++);
                out.catalog.add(std::move(d));
            }
        } else if (type == "practice_pattern") {
            std::vector<std::string> pages = string_list(r, "pages");
            try {
                auto res = ingest_guideline_pages(field_text(r, {"title", "venue"}), pages);
                for (auto& rej : res.rejections) out.rejections.push_back({i, rej.reason, rej.detail});
                for (auto& d : res.documents) out.catalog.add(std::move(d));
            } catch (const ValidationError& e) {
                out.rejections.push_back({i, e.code(), e.what()});
            }
        } else if (type == "wiki_article") {
            const auto it = wiki_doc_at.find(i);
            if (it != wiki_doc_at.end()) out.catalog.add(wiki.documents[it->second]);
        } else {
            out.rejections.push_back({i, "unknown_type", type});
        }
    }
    for (const auto& rej : wiki.rejections) {
        out.rejections.push_back({wiki_record[rej.record], rej.reason, rej.detail});
    }
    std::stable_sort(out.rejections.begin(), out.rejections.end(),
                     [](const Rejection& a, const Rejection& b) { return a.record < b.record; });
    return out;
}

}  // namespace

CatalogBuild ingest_records(const std::vector<json>& records, int current_year) {
    std::vector<Record> recs;
    recs.reserve(records.size());
    for (const auto& r : records) recs.push_back({r, ""});
    return ingest_parsed(recs, current_year);
}

CatalogBuild ingest_jsonl_text(std::string_view content, int current_year) {
    std::vector<Record> recs;
    for (const auto& line : text::split_lines(content)) {
        if (text::trim(line).empty()) continue;
        try {
            recs.push_back({json::parse(line), ""});
        } catch (const json::parse_error&) {
            recs.push_back({std::nullopt, "malformed_json"});
        }
    }
    return ingest_parsed(recs, current_year);
}

std::string make_snippet_id(std::string_view doc_id, std::size_t ordinal) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "#%04zu", ordinal);
    return std::string(doc_id) + buf;
}

std::vector<Snippet> chunk_document(const Document& doc, std::size_t max_tokens, const Tokenizer& tokenizer) {
    if (max_tokens < 1) throw ValidationError("invalid_max_tokens", "max_tokens must be >= 1");
    const std::string body = text::normalize_whitespace(doc.body);
    if (body.empty()) throw ValidationError("empty_body", "document " + doc.doc_id + " has an empty body");

    const auto pieces = tokenizer.pieces(body);
    std::vector<Snippet> out;
    std::size_t chunk_begin = 0;  // byte offset where the current snippet starts
    std::size_t chunk_tokens = 0;
    auto emit = [&](std::size_t end) {
        Snippet s;
        s.doc_id = doc.doc_id;
        s.ordinal = out.size();
        s.snippet_id = make_snippet_id(doc.doc_id, s.ordinal);
        s.text = body.substr(chunk_begin, end - chunk_begin);
        s.token_count = chunk_tokens;
        out.push_back(std::move(s));
    };
    for (const auto& p : pieces) {
        if (p.cost > max_tokens) {
            throw ValidationError("unsplittable_token",
                                  "a token of " + std::to_string(p.cost) + " units in " + doc.doc_id +
                                      " exceeds max_tokens " + std::to_string(max_tokens));
        }
        if (chunk_tokens + p.cost > max_tokens) {
            emit(p.begin);
            chunk_begin = p.begin;
            chunk_tokens = 0;
        }
        chunk_tokens += p.cost;
    }
    emit(body.size());
    return out;
}

std::vector<Snippet> chunk_catalog(const Catalog& catalog, std::size_t max_tokens, const Tokenizer& tokenizer) {
    std::vector<Snippet> out;
    for (const auto& d : catalog.documents()) {
        auto s = chunk_document(d, max_tokens, tokenizer);
        std::move(s.begin(), s.end(), std::back_inserter(out));
    }
    return out;
}

SnippetStore::SnippetStore(std::vector<Snippet> snippets) : snippets_(std::move(snippets)) {
    for (std::size_t i = 0; i < snippets_.size(); ++i) {
        if (!by_id_.emplace(snippets_[i].snippet_id, i).second) {
            throw ValidationError("duplicate_snippet_id", "duplicate snippet id " + snippets_[i].snippet_id);
        }
    }
}

const Snippet* SnippetStore::find(std::string_view snippet_id) const {
    const auto it = by_id_.find(std::string(snippet_id));
    return it == by_id_.end() ? nullptr : &snippets_[it->second];
}

}  // namespace evr
