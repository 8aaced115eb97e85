#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evr/corpus.hpp"
#include "evr/embedding.hpp"

namespace evr {

struct RetrievalHit {
    std::string snippet_id;
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based

    bool operator==(const RetrievalHit&) const = default;
};

json to_json(const RetrievalHit& hit);
RetrievalHit hit_from_json(const json& j);

// Exhaustive flat index over snippet embeddings.
//
// File layout, all integers little-endian:
//   "EVRIDX1" | u8 provider_kind | u32 len + model_name | u32 dims | u64 count
//   count x ( u32 len + snippet_id | u32 len + doc_id | dims x f32 | f32 norm )
//
// The in-memory norm is recomputed in double from the float32 values on
// load; the stored float32 norm is checked against it as an integrity guard.
class VectorIndex {
public:
    explicit VectorIndex(EmbeddingProviderSpec spec);

    const EmbeddingProviderSpec& spec() const { return spec_; }
    std::size_t size() const { return snippet_ids_.size(); }
    bool empty() const { return snippet_ids_.empty(); }

    const std::string& snippet_id(std::size_t i) const { return snippet_ids_[i]; }
    const std::string& doc_id(std::size_t i) const { return doc_ids_[i]; }
    std::span<const float> vector(std::size_t i) const;
    double norm(std::size_t i) const { return norms_[i]; }

    void add(std::string snippet_id, std::string doc_id, const EmbeddingVector& v);

    std::string serialize() const;
    static VectorIndex deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

private:
    EmbeddingProviderSpec spec_;
    std::vector<std::string> snippet_ids_;
    std::vector<std::string> doc_ids_;
    std::vector<float> data_;  // size() x dims, row-major
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> by_snippet_;
};

// Embeds every snippet (up to `jobs` concurrent provider calls) and commits
// vectors in snippet order. Throws ValidationError on an empty input.
VectorIndex build_index(const std::vector<Snippet>& snippets, const EmbeddingProvider& provider, std::size_t jobs = 1);

// Adds snippets to an existing index. Throws ValidationError("provider_mismatch")
// when the provider spec differs from the one recorded in the index.
void append_to_index(VectorIndex& index, const std::vector<Snippet>& snippets, const EmbeddingProvider& provider,
                     std::size_t jobs = 1);

// Top-k snippets by cosine similarity, ties broken by ascending snippet_id.
// k larger than the index returns every entry.
std::vector<RetrievalHit> retrieve_top_k(const EmbeddingVector& query, const VectorIndex& index, std::size_t k);
std::vector<RetrievalHit> retrieve_top_k(std::string_view query, const VectorIndex& index,
                                         const EmbeddingProvider& provider, std::size_t k);

// Keeps the first (best) hit of each doc_id and re-ranks 1..k_docs.
std::vector<RetrievalHit> dedupe_to_documents(const std::vector<RetrievalHit>& hits, std::size_t k_docs);

}  // namespace evr
