#include "evr/vector_index.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "evr/error.hpp"
#include "evr/text.hpp"

namespace evr {

namespace {

constexpr std::string_view kMagic = "EVRIDX1";

class Writer {
public:
    void bytes(std::string_view b) { out_.append(b); }
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    std::string_view bytes(std::size_t n) {
        need(n);
        auto b = in_.substr(pos_, n);
        pos_ += n;
        return b;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
    std::uint32_t u32() {
        const auto b = bytes(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
        return v;
    }
    std::uint64_t u64() {
        const auto b = bytes(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str() { return std::string(bytes(u32())); }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw ValidationError("corrupt_index", "index file is truncated");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

std::vector<EmbeddingVector> embed_all(const std::vector<Snippet>& snippets, const EmbeddingProvider& provider,
                                       std::size_t jobs) {
    std::vector<EmbeddingVector> out(snippets.size());
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, snippets.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < snippets.size(); ++i) out[i] = provider.embed(snippets[i].text);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < snippets.size(); i = next++) {
                try {
                    out[i] = provider.embed(snippets[i].text);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                    next = snippets.size();
                }
            }
        });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace

json to_json(const RetrievalHit& hit) {
    return json{{"snippet_id", hit.snippet_id}, {"doc_id", hit.doc_id}, {"score", hit.score}, {"rank", hit.rank}};
}

RetrievalHit hit_from_json(const json& j) {
    return RetrievalHit{j.at("snippet_id").get<std::string>(), j.at("doc_id").get<std::string>(),
                        j.at("score").get<double>(), j.at("rank").get<std::size_t>()};
}

VectorIndex::VectorIndex(EmbeddingProviderSpec spec) : spec_(std::move(spec)) {
    if (spec_.dims == 0) throw ValidationError("invalid_dims", "index dims must be >= 1");
}

std::span<const float> VectorIndex::vector(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * spec_.dims, spec_.dims);
}

void VectorIndex::add(std::string snippet_id, std::string doc_id, const EmbeddingVector& v) {
    if (v.dims() != spec_.dims) {
        throw ValidationError("provider_mismatch", "vector has " + std::to_string(v.dims()) +
                                                       " dims, index expects " + std::to_string(spec_.dims));
    }
    if (!(v.norm() > 0.0)) throw ValidationError("zero_norm", "snippet " + snippet_id + " embeds to a zero vector");
    if (by_snippet_.contains(snippet_id)) {
        throw ValidationError("duplicate_snippet_id", "snippet " + snippet_id + " is already indexed");
    }
    by_snippet_.emplace(snippet_id, snippet_ids_.size());
    snippet_ids_.push_back(std::move(snippet_id));
    doc_ids_.push_back(std::move(doc_id));
    data_.insert(data_.end(), v.values().begin(), v.values().end());
    norms_.push_back(v.norm());
}

std::string VectorIndex::serialize() const {
    Writer w;
    w.bytes(kMagic);
    w.u8(static_cast<std::uint8_t>(spec_.provider_kind));
    w.str(spec_.model_name);
    w.u32(static_cast<std::uint32_t>(spec_.dims));
    w.u64(size());
    for (std::size_t i = 0; i < size(); ++i) {
        w.str(snippet_ids_[i]);
        w.str(doc_ids_[i]);
        for (const float f : vector(i)) w.f32(f);
        w.f32(static_cast<float>(norms_[i]));
    }
    return w.take();
}

VectorIndex VectorIndex::deserialize(std::string_view bytes) {
    Reader r(bytes);
    if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
        throw ValidationError("corrupt_index", "missing EVRIDX1 magic");
    }
    EmbeddingProviderSpec spec;
    const auto kind = r.u8();
    if (kind > 1) throw ValidationError("corrupt_index", "unknown provider kind " + std::to_string(kind));
    spec.provider_kind = static_cast<ProviderKind>(kind);
    spec.model_name = r.str();
    spec.dims = r.u32();
    const auto count = r.u64();
    VectorIndex index(spec);
    std::vector<float> values(spec.dims);
    for (std::uint64_t n = 0; n < count; ++n) {
        auto sid = r.str();
        auto did = r.str();
        for (auto& f : values) f = r.f32();
        const float stored_norm = r.f32();
        EmbeddingVector v(values);
        if (std::abs(static_cast<double>(stored_norm) - v.norm()) > 1e-6 * std::max(1.0, v.norm())) {
            throw ValidationError("corrupt_index", "stored norm of " + sid + " disagrees with its values");
        }
        index.add(std::move(sid), std::move(did), v);
    }
    if (!r.done()) throw ValidationError("corrupt_index", "trailing bytes after the last record");
    return index;
}

void VectorIndex::save(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

VectorIndex build_index(const std::vector<Snippet>& snippets, const EmbeddingProvider& provider, std::size_t jobs) {
    if (snippets.empty()) throw ValidationError("empty_input", "cannot build an index from zero snippets");
    VectorIndex index(provider.spec());
    append_to_index(index, snippets, provider, jobs);
    return index;
}

void append_to_index(VectorIndex& index, const std::vector<Snippet>& snippets, const EmbeddingProvider& provider,
                     std::size_t jobs) {
    if (!(provider.spec() == index.spec())) {
        throw ValidationError("provider_mismatch", "index was built with " + index.spec().describe() +
                                                       ", provider is " + provider.spec().describe());
    }
    auto vectors = embed_all(snippets, provider, jobs);
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        index.add(snippets[i].snippet_id, snippets[i].doc_id, vectors[i]);
    }
}

std::vector<RetrievalHit> retrieve_top_k(const EmbeddingVector& query, const VectorIndex& index, std::size_t k) {
    if (k < 1) throw ValidationError("invalid_k", "k must be >= 1");
    if (index.empty()) throw ValidationError("empty_index", "index has no entries");
    if (query.dims() != index.spec().dims) {
        throw ValidationError("provider_mismatch", "query has " + std::to_string(query.dims()) +
                                                       " dims, index expects " + std::to_string(index.spec().dims));
    }
    std::vector<double> scores(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        scores[i] = cosine_similarity(query.values(), query.norm(), index.vector(i), index.norm(i));
    }
    std::vector<std::size_t> order(index.size());
    std::iota(order.begin(), order.end(), 0);
    const auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.snippet_id(a) < index.snippet_id(b);
    };
    k = std::min(k, index.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    std::vector<RetrievalHit> hits;
    hits.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
        const auto i = order[r];
        hits.push_back({index.snippet_id(i), index.doc_id(i), scores[i], r + 1});
    }
    return hits;
}

std::vector<RetrievalHit> retrieve_top_k(std::string_view query, const VectorIndex& index,
                                         const EmbeddingProvider& provider, std::size_t k) {
    if (!(provider.spec() == index.spec())) {
        throw ValidationError("provider_mismatch", "index was built with " + index.spec().describe() +
                                                       ", provider is " + provider.spec().describe());
    }
    if (text::trim(query).empty()) throw ValidationError("empty_query", "query text is empty");
    return retrieve_top_k(provider.embed(query), index, k);
}

std::vector<RetrievalHit> dedupe_to_documents(const std::vector<RetrievalHit>& hits, std::size_t k_docs) {
    std::vector<RetrievalHit> out;
    std::unordered_set<std::string> seen;
    for (const auto& h : hits) {
        if (out.size() >= k_docs) break;
        if (!seen.insert(h.doc_id).second) continue;
        auto doc_hit = h;
        doc_hit.rank = out.size() + 1;
        out.push_back(std::move(doc_hit));
    }
    return out;
}

}  // namespace evr
