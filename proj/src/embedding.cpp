#include "evr/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "evr/error.hpp"
#include "evr/text.hpp"
#include "evr/tokenizer.hpp"

namespace evr {

std::string_view to_string(ProviderKind kind) {
    return kind == ProviderKind::RemoteApi ? "remote_api" : "deterministic_local";
}

ProviderKind parse_provider_kind(std::string_view s) {
    if (s == "remote_api" || s == "remote") return ProviderKind::RemoteApi;
    if (s == "deterministic_local" || s == "local") return ProviderKind::DeterministicLocal;
    throw ValidationError("invalid_provider", "unknown embedding provider kind '" + std::string(s) + "'");
}

std::string EmbeddingProviderSpec::describe() const {
    return std::string(to_string(provider_kind)) + ":" + model_name + ":" + std::to_string(dims);
}

double euclidean_norm(std::span<const float> values) {
    double sum = 0.0;
    for (const float v : values) sum += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(sum);
}

EmbeddingVector::EmbeddingVector(std::vector<float> values)
    : values_(std::move(values)), norm_(euclidean_norm(values_)) {}

double cosine_similarity(std::span<const float> a, double norm_a, std::span<const float> b, double norm_b) {
    if (a.size() != b.size()) {
        throw ValidationError("dims_mismatch", "cosine of " + std::to_string(a.size()) + "-d and " +
                                                   std::to_string(b.size()) + "-d vectors");
    }
    if (!(norm_a > 0.0) || !(norm_b > 0.0)) throw ValidationError("zero_norm", "cosine of a zero vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_similarity(a.values(), a.norm(), b.values(), b.norm());
}

EmbeddingVector EmbeddingProvider::embed(std::string_view text) const {
    if (text::normalize_whitespace(text).empty()) throw ValidationError("empty_text", "cannot embed empty text");
    auto v = embed_impl(text);
    if (v.dims() != spec().dims) {
        throw ValidationError("dims_mismatch", "provider " + spec().describe() + " returned " +
                                                   std::to_string(v.dims()) + " dims");
    }
    return v;
}

LocalHashEmbedder::LocalHashEmbedder(std::size_t dims, std::string model_name) {
    if (dims == 0) throw ValidationError("invalid_dims", "embedding dims must be >= 1");
    spec_ = {ProviderKind::DeterministicLocal, std::move(model_name), dims};
}

std::vector<std::string> LocalHashEmbedder::features(std::string_view text) {
    std::vector<std::string> raw;
    for (const auto& piece : WhitespaceTokenizer{}.pieces(text)) {
        raw.push_back(text::to_lower_ascii(text.substr(piece.begin, piece.end - piece.begin)));
    }
    const auto strip = [](unsigned char c) { return c < 0x80 && !std::isalnum(c); };
    std::vector<std::string> out;
    for (const auto& w : raw) {
        std::size_t b = 0;
        std::size_t e = w.size();
        while (b < e && strip(static_cast<unsigned char>(w[b]))) ++b;
        while (e > b && strip(static_cast<unsigned char>(w[e - 1]))) --e;
        if (e > b) out.push_back(w.substr(b, e - b));
    }
    return out.empty() ? raw : out;
}

EmbeddingVector LocalHashEmbedder::embed_impl(std::string_view text) const {
    std::vector<double> acc(spec_.dims, 0.0);
    for (const auto& f : features(text)) {
        const auto slot = stable_hash(f, kSlotSeed) % spec_.dims;
        const double sign = (stable_hash(f, kSignSeed) >> 63) ? -1.0 : 1.0;
        acc[slot] += sign;
    }
    double sum = 0.0;
    for (const double v : acc) sum += v * v;
    if (sum == 0.0) throw ValidationError("zero_norm", "hashed features cancel to a zero vector");
    const double inv = 1.0 / std::sqrt(sum);
    std::vector<float> values(spec_.dims);
    for (std::size_t i = 0; i < spec_.dims; ++i) values[i] = static_cast<float>(acc[i] * inv);
    return EmbeddingVector(std::move(values));
}

RemoteEmbedder::RemoteEmbedder(HttpEndpoint endpoint, std::string model_name, std::size_t dims)
    : endpoint_(std::move(endpoint)) {
    if (dims == 0) throw ValidationError("invalid_dims", "embedding dims must be >= 1");
    spec_ = {ProviderKind::RemoteApi, std::move(model_name), dims};
}

EmbeddingVector RemoteEmbedder::embed_impl(std::string_view text) const {
    const auto response = post_json(endpoint_, "/embeddings", json{{"input", text}, {"model", spec_.model_name}});
    const json* arr = nullptr;
    if (response.contains("embedding")) {
        arr = &response["embedding"];
    } else if (response.contains("data") && response["data"].is_array() && !response["data"].empty() &&
               response["data"][0].contains("embedding")) {
        arr = &response["data"][0]["embedding"];
    }
    if (!arr || !arr->is_array()) throw Error("provider_bad_response", "response has no embedding array");
    std::vector<float> values;
    values.reserve(arr->size());
    for (const auto& v : *arr) {
        if (!v.is_number()) throw Error("provider_bad_response", "non-numeric embedding component");
        values.push_back(v.get<float>());
    }
    return EmbeddingVector(std::move(values));
}

std::optional<std::size_t> known_model_dims(std::string_view model_name) {
    if (model_name == "text-embedding-ada-002" || model_name == "text-embedding-3-small") return 1536;
    if (model_name == "text-embedding-3-large") return 3072;
    return std::nullopt;
}

}  // namespace evr
