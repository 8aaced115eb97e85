#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evr/error.hpp"
#include "evr/vector_index.hpp"
#include "test_support.hpp"

namespace evr {
namespace {

Snippet snippet(std::string doc_id, std::size_t ordinal, std::string text) {
    Snippet s;
    s.snippet_id = make_snippet_id(doc_id, ordinal);
    s.doc_id = std::move(doc_id);
    s.ordinal = ordinal;
    s.text = std::move(text);
    return s;
}

std::vector<Snippet> sample_snippets(std::size_t n) {
    std::mt19937_64 rng(4242);
    std::vector<Snippet> out;
    std::size_t i = 0;
    while (out.size() < n) {
        auto batch = testing::random_snippets(rng, 12);
        for (auto& s : batch) {
            if (out.size() == n) break;
            s.doc_id = "d" + std::to_string(i) + "-" + s.doc_id;
            s.snippet_id = make_snippet_id(s.doc_id, s.ordinal);
            out.push_back(std::move(s));
        }
        ++i;
    }
    return out;
}

TEST(VectorIndex, SaveLoadRoundTrip) {
    const LocalHashEmbedder e;
    const auto snippets = sample_snippets(50);
    const auto index = build_index(snippets, e, 4);
    testing::TempDir dir;
    index.save(dir / "idx.bin");
    const auto loaded = VectorIndex::load(dir / "idx.bin");
    ASSERT_EQ(loaded.size(), index.size());
    EXPECT_EQ(loaded.spec(), e.spec());
    for (std::size_t i = 0; i < index.size(); ++i) {
        EXPECT_EQ(loaded.snippet_id(i), snippets[i].snippet_id);
        EXPECT_EQ(loaded.doc_id(i), snippets[i].doc_id);
        EXPECT_DOUBLE_EQ(loaded.norm(i), index.norm(i));
        const auto a = loaded.vector(i), b = index.vector(i);
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
}

TEST(VectorIndex, RebuildIsByteIdenticalRegardlessOfJobs) {
    const LocalHashEmbedder e;
    const auto snippets = sample_snippets(80);
    EXPECT_EQ(build_index(snippets, e, 1).serialize(), build_index(snippets, e, 8).serialize());
}

TEST(VectorIndex, StoredNormsMatchRecomputation) {
    const LocalHashEmbedder e;
    const auto snippets = sample_snippets(200);
    const auto index = VectorIndex::deserialize(build_index(snippets, e).serialize());
    for (std::size_t i = 0; i < index.size(); ++i) {
        double ss = 0.0;
        for (const float x : index.vector(i)) ss += static_cast<double>(x) * x;
        EXPECT_NEAR(index.norm(i), std::sqrt(ss), 1e-9);
    }
}

TEST(VectorIndex, CorruptBytesRejected) {
    const LocalHashEmbedder e;
    const auto bytes = build_index(sample_snippets(5), e).serialize();
    EXPECT_THROW(VectorIndex::deserialize(bytes.substr(0, bytes.size() - 3)), ValidationError);
    EXPECT_THROW(VectorIndex::deserialize(bytes + "x"), ValidationError);
    EXPECT_THROW(VectorIndex::deserialize("NOTANIDX"), ValidationError);
    auto tampered = bytes;
    tampered[tampered.size() - 5] ^= 0x40;  // exponent byte of the last vector value
    EXPECT_THROW(VectorIndex::deserialize(tampered), ValidationError);
}

TEST(VectorIndex, RejectsDuplicatesAndEmptyInput) {
    const LocalHashEmbedder e;
    EXPECT_THROW(build_index({}, e), ValidationError);
    EXPECT_THROW(build_index({snippet("a", 0, "x"), snippet("a", 0, "y")}, e), ValidationError);
}

TEST(Retrieval, SelfSimilarityRanksFirst) {
    const LocalHashEmbedder e;
    std::vector<Snippet> snippets{snippet("pm-1", 0, "macular hole surgery with gas tamponade"),
                                  snippet("pm-2", 0, "glaucoma drainage devices in children"),
                                  snippet("pm-3", 0, "dry eye disease and meibomian gland dysfunction"),
                                  snippet("pm-4", 0, "keratoconus corneal crosslinking outcomes")};
    const auto index = build_index(snippets, e);
    for (const auto& s : snippets) {
        const auto hits = retrieve_top_k(s.text, index, e, 2);
        ASSERT_EQ(hits.size(), 2u);
        EXPECT_EQ(hits[0].snippet_id, s.snippet_id);
        EXPECT_EQ(hits[0].rank, 1u);
        EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
        EXPECT_EQ(hits[1].rank, 2u);
    }
}

TEST(Retrieval, KLargerThanIndexReturnsAll) {
    const LocalHashEmbedder e;
    const auto index = build_index(sample_snippets(7), e);
    EXPECT_EQ(retrieve_top_k("cornea", index, e, 100).size(), 7u);
    EXPECT_THROW(retrieve_top_k("cornea", index, e, 0), ValidationError);
    EXPECT_THROW(retrieve_top_k("  ", index, e, 3), ValidationError);
}

TEST(Retrieval, ProviderMismatch) {
    const LocalHashEmbedder e;
    const LocalHashEmbedder other(64, "local-hash-64");
    auto index = build_index(sample_snippets(4), e);
    try {
        retrieve_top_k("retina", index, other, 3);
        FAIL();
    } catch (const ValidationError& err) {
        EXPECT_EQ(err.code(), "provider_mismatch");
    }
    EXPECT_THROW(append_to_index(index, {snippet("new", 0, "text")}, other), ValidationError);
}

TEST(Retrieval, MatchesBruteForceOracleWithTies) {
    const LocalHashEmbedder e;
    std::mt19937_64 rng(777);
    const std::vector<std::string> queries{"retina", "optic nerve", "cornea lens", "pressure glaucoma retina"};
    for (int trial = 0; trial < 60; ++trial) {
        const auto snippets = testing::random_snippets(rng, 40);
        std::vector<EmbeddingVector> vectors;
        for (const auto& s : snippets) vectors.push_back(e.embed(s.text));
        const auto index = build_index(snippets, e);
        for (const auto& q : queries) {
            const auto qv = e.embed(q);
            const auto oracle = testing::brute_force_ranking(snippets, vectors, qv);
            const std::size_t k = 1 + rng() % (snippets.size() + 2);
            const auto hits = retrieve_top_k(qv, index, k);
            ASSERT_EQ(hits.size(), std::min(k, snippets.size()));
            for (std::size_t i = 0; i < hits.size(); ++i) {
                EXPECT_EQ(hits[i].snippet_id, oracle[i].snippet_id) << "trial " << trial << " rank " << i + 1;
                EXPECT_EQ(hits[i].rank, i + 1);
                EXPECT_NEAR(hits[i].score, oracle[i].score, 1e-9);
                if (i > 0) {
                    EXPECT_GE(hits[i - 1].score, hits[i].score);
                }
            }
            const std::size_t kd = 1 + rng() % 6;
            const auto docs = dedupe_to_documents(retrieve_top_k(qv, index, index.size()), kd);
            const auto docs_oracle = testing::brute_force_documents(oracle, kd);
            ASSERT_EQ(docs.size(), docs_oracle.size());
            for (std::size_t i = 0; i < docs.size(); ++i) {
                EXPECT_EQ(docs[i].doc_id, docs_oracle[i].doc_id);
                EXPECT_EQ(docs[i].rank, i + 1);
            }
        }
    }
}

TEST(Retrieval, AppendingNeverLowersBestScore) {
    const LocalHashEmbedder e;
    std::mt19937_64 rng(31337);
    const auto all = testing::random_snippets(rng, 60);
    VectorIndex index(e.spec());
    double best = -2.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        append_to_index(index, {all[i]}, e);
        const auto top = retrieve_top_k("retina pressure", index, e, 1);
        EXPECT_GE(top[0].score, best);
        best = top[0].score;
    }
}

TEST(Dedupe, KeepsBestHitPerDocument) {
    const std::vector<RetrievalHit> hits{{"a#0001", "a", 0.9, 1}, {"a#0000", "a", 0.8, 2},
                                         {"b#0000", "b", 0.7, 3}, {"c#0000", "c", 0.6, 4}};
    const auto d = dedupe_to_documents(hits, 2);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].snippet_id, "a#0001");
    EXPECT_EQ(d[1].doc_id, "b");
    EXPECT_EQ(d[1].rank, 2u);
}

TEST(RetrievalHit, JsonRoundTrip) {
    const RetrievalHit h{"pm-1#0002", "pm-1", 0.5, 3};
    EXPECT_EQ(hit_from_json(to_json(h)), h);
}

}  // namespace
}  // namespace evr
