#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evr/http_client.hpp"

namespace evr {

enum class ProviderKind : std::uint8_t { RemoteApi = 0, DeterministicLocal = 1 };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view s);

struct EmbeddingProviderSpec {
    ProviderKind provider_kind = ProviderKind::DeterministicLocal;
    std::string model_name = "local-hash-v1";
    std::size_t dims = 256;

    bool operator==(const EmbeddingProviderSpec&) const = default;
    std::string describe() const;
};

// Dense float32 vector with its Euclidean norm computed once (in double)
// from the stored values.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> values);

    std::size_t dims() const { return values_.size(); }
    std::span<const float> values() const { return values_; }
    double norm() const { return norm_; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<float> values_;
    double norm_ = 0.0;
};

double euclidean_norm(std::span<const float> values);

// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws ValidationError on a
// dimension mismatch or a zero norm.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine_similarity(std::span<const float> a, double norm_a, std::span<const float> b, double norm_b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual const EmbeddingProviderSpec& spec() const = 0;

    // Rejects empty or whitespace-only text with ValidationError("empty_text").
    EmbeddingVector embed(std::string_view text) const;

protected:
    virtual EmbeddingVector embed_impl(std::string_view text) const = 0;
};

// Feature-hashing projection, fully offline:
//   1. split on Unicode whitespace; lowercase ASCII letters; strip leading
//      and trailing ASCII punctuation from each word; drop empty words (if
//      that leaves nothing, the lowercased unstripped words are used);
//   2. slot = stable_hash(word, kSlotSeed) mod dims,
//      sign = top bit of stable_hash(word, kSignSeed) ? -1 : +1;
//   3. accumulate sign into the slot, L2-normalize, store as float32.
class LocalHashEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::uint64_t kSlotSeed = 0x736c6f74;  // "slot"
    static constexpr std::uint64_t kSignSeed = 0x7369676e;  // "sign"

    explicit LocalHashEmbedder(std::size_t dims = 256, std::string model_name = "local-hash-v1");

    const EmbeddingProviderSpec& spec() const override { return spec_; }

    static std::vector<std::string> features(std::string_view text);

protected:
    EmbeddingVector embed_impl(std::string_view text) const override;

private:
    EmbeddingProviderSpec spec_;
};

// POST {base_url}/embeddings with {"input", "model"}; accepts either
// {"embedding": [...]} or {"data": [{"embedding": [...]}]} back.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(HttpEndpoint endpoint, std::string model_name, std::size_t dims);

    const EmbeddingProviderSpec& spec() const override { return spec_; }

protected:
    EmbeddingVector embed_impl(std::string_view text) const override;

private:
    HttpEndpoint endpoint_;
    EmbeddingProviderSpec spec_;
};

// Output width of well-known remote embedding models, if known.
std::optional<std::size_t> known_model_dims(std::string_view model_name);

}  // namespace evr
