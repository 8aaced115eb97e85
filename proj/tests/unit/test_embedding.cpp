#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "evr/embedding.hpp"
#include "evr/error.hpp"

namespace evr {
namespace {

// Golden values from tests/oracles/hash_embedding_oracle.py.
TEST(LocalHashEmbedder, FeaturesStripPunctuationAndLowercase) {
    EXPECT_EQ(LocalHashEmbedder::features("Anti-VEGF injections, e.g. ranibizumab, restore vision (sometimes)."),
              (std::vector<std::string>{"anti-vegf", "injections", "e.g", "ranibizumab", "restore", "vision",
                                        "sometimes"}));
    EXPECT_EQ(LocalHashEmbedder::features("-- ... !!"), (std::vector<std::string>{"--", "...", "!!"}));
}

TEST(LocalHashEmbedder, GoldenVector) {
    const LocalHashEmbedder e;
    const auto v = e.embed("Anti-VEGF injections, e.g. ranibizumab, restore vision (sometimes).");
    ASSERT_EQ(v.dims(), 256u);
    const float w = 0.37796446681022644f;
    const std::map<std::size_t, float> expected{{7, w},    {11, -w}, {22, -w}, {64, -w},
                                                {120, w}, {182, -w}, {237, w}};
    for (std::size_t i = 0; i < 256; ++i) {
        const auto it = expected.find(i);
        EXPECT_FLOAT_EQ(v.values()[i], it == expected.end() ? 0.0f : it->second) << "slot " << i;
    }
    EXPECT_NEAR(v.norm(), 1.0, 1e-6);
}

TEST(LocalHashEmbedder, OracleCosine) {
    const LocalHashEmbedder e;
    EXPECT_NEAR(cosine_similarity(e.embed("intraocular pressure after LASIK"),
                                  e.embed("LASIK raises intraocular pressure")),
                0.75, 1e-6);
}

TEST(LocalHashEmbedder, DeterministicAcrossInstances) {
    const LocalHashEmbedder a, b;
    const std::string text = "Retinal detachment after cataract surgery in high myopia";
    EXPECT_EQ(a.embed(text), b.embed(text));
    EXPECT_EQ(a.embed(text), a.embed(text));
}

TEST(LocalHashEmbedder, RejectsEmptyText) {
    const LocalHashEmbedder e;
    for (const char* s : {"", "   ", "\n\t"}) {
        try {
            e.embed(s);
            FAIL() << "accepted '" << s << "'";
        } catch (const ValidationError& err) {
            EXPECT_EQ(err.code(), "empty_text");
        }
    }
}

TEST(LocalHashEmbedder, CustomDims) {
    const LocalHashEmbedder e(32, "local-hash-32");
    EXPECT_EQ(e.spec().dims, 32u);
    EXPECT_EQ(e.embed("word").dims(), 32u);
    EXPECT_THROW(LocalHashEmbedder(0), ValidationError);
}

TEST(Cosine, HandComputedValues) {
    EXPECT_NEAR(cosine_similarity(EmbeddingVector({1, 0}), EmbeddingVector({0, 1})), 0.0, 1e-12);
    EXPECT_NEAR(cosine_similarity(EmbeddingVector({1, 0}), EmbeddingVector({1, 0})), 1.0, 1e-12);
    EXPECT_NEAR(cosine_similarity(EmbeddingVector({1, 0}), EmbeddingVector({-1, 0})), -1.0, 1e-12);
    // 32 / (sqrt(14) * sqrt(77))
    EXPECT_NEAR(cosine_similarity(EmbeddingVector({1, 2, 3}), EmbeddingVector({4, 5, 6})), 0.9746318461970762,
                1e-9);
}

TEST(Cosine, ErrorCases) {
    EXPECT_THROW(cosine_similarity(EmbeddingVector({1, 0}), EmbeddingVector({1, 0, 0})), ValidationError);
    EXPECT_THROW(cosine_similarity(EmbeddingVector({0, 0}), EmbeddingVector({1, 0})), ValidationError);
}

TEST(Cosine, SymmetricAndBoundedOnRandomVectors) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (int i = 0; i < 500; ++i) {
        const std::size_t d = 1 + rng() % 40;
        std::vector<float> a(d), b(d);
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        const EmbeddingVector va(a), vb(b);
        const double ab = cosine_similarity(va, vb);
        EXPECT_DOUBLE_EQ(ab, cosine_similarity(vb, va));
        EXPECT_LE(std::abs(ab), 1.0);
        EXPECT_NEAR(cosine_similarity(va, va), 1.0, 1e-12);
    }
}

TEST(ProviderSpec, KnownRemoteModels) {
    EXPECT_EQ(known_model_dims("text-embedding-3-small"), 1536u);
    EXPECT_EQ(known_model_dims("text-embedding-ada-002"), 1536u);
    EXPECT_FALSE(known_model_dims("home-grown"));
    EXPECT_EQ(parse_provider_kind(to_string(ProviderKind::RemoteApi)), ProviderKind::RemoteApi);
    EXPECT_THROW(parse_provider_kind("carrier-pigeon"), ValidationError);
}

}  // namespace
}  // namespace evr
