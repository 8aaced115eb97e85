#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "evr/error.hpp"
#include "evr/rag.hpp"
#include "evr/selection.hpp"

namespace evr {
namespace {

FactualityVerdict cited(std::optional<std::string> doc_id) {
    FactualityVerdict v;
    v.evidence.matched_doc_id = std::move(doc_id);
    v.label = v.evidence.matched_doc_id ? FactualityLabel::Correct : FactualityLabel::Hallucinated;
    return v;
}

std::vector<RetrievalHit> hits(std::size_t k) {
    std::vector<RetrievalHit> out;
    for (std::size_t r = 1; r <= k; ++r) out.push_back({"d" + std::to_string(r) + "#0000", "d" + std::to_string(r), 0.0, r});
    return out;
}

TEST(SelectionStats, WorkedExample) {
    const auto s = selection_stats("q", hits(10), {cited("d3"), cited("elsewhere"), cited("d5")});
    EXPECT_EQ(s.cited_total, 3u);
    EXPECT_EQ(s.cited_from_topk, 2u);
    ASSERT_TRUE(s.selected_fraction);
    EXPECT_NEAR(*s.selected_fraction, 0.6667, 0.0001);
    EXPECT_EQ(s.matched_ranks, (std::vector<std::size_t>{3, 5}));
    EXPECT_EQ(s.mean_rank, 4.0);
}

TEST(SelectionStats, NothingCited) {
    const auto s = selection_stats("q", hits(10), {});
    EXPECT_FALSE(s.selected_fraction);
    EXPECT_FALSE(s.mean_rank);
    EXPECT_TRUE(s.to_json().at("selected_fraction").is_null());
}

TEST(SelectionStats, CompleteSelection) {
    const auto s = selection_stats("q", hits(10), {cited("d1"), cited("d2"), cited("d3")});
    EXPECT_EQ(s.selected_fraction, 1.0);
    EXPECT_EQ(s.mean_rank, 2.0);
}

TEST(SelectionStats, HallucinatedCitationsCountInDenominator) {
    const auto s = selection_stats("q", hits(10), {cited(std::nullopt), cited("d2")});
    EXPECT_EQ(s.selected_fraction, 0.5);
}

TEST(SelectionStats, NoRagIsNotApplicable) {
    GenerationResult r;
    r.mode = Mode::NoRag;
    try {
        selection_stats(r, {});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), "not_applicable");
    }
}

SelectionStats with_counts(std::size_t total, std::size_t hit) {
    SelectionStats s;
    s.cited_total = total;
    s.cited_from_topk = hit;
    if (total) s.selected_fraction = static_cast<double>(hit) / static_cast<double>(total);
    for (std::size_t i = 0; i < hit; ++i) s.matched_ranks.push_back(1 + i % 10);
    if (hit) s.mean_rank = std::accumulate(s.matched_ranks.begin(), s.matched_ranks.end(), 0.0) / hit;
    return s;
}

TEST(Aggregate, ReferenceWeightedFraction) {
    // 173 of 277 spread unevenly over questions.
    std::vector<SelectionStats> stats;
    std::size_t total = 0, hit = 0;
    std::mt19937_64 rng(1);
    while (total < 277) {
        const std::size_t t = std::min<std::size_t>(1 + rng() % 3, 277 - total);
        const std::size_t h = std::min<std::size_t>(t, 173 - hit);
        stats.push_back(with_counts(t, std::min(h, t)));
        total += t;
        hit += std::min(h, t);
    }
    ASSERT_EQ(total, 277u);
    ASSERT_EQ(hit, 173u);
    const auto agg = aggregate_selection(stats);
    EXPECT_NEAR(100.0 * agg.overall_fraction, 62.5, 0.05);
    EXPECT_NE(agg.to_text().find("62.5%"), std::string::npos);
}

TEST(Aggregate, TwoPointStatistics) {
    SelectionStats a, b;
    a.cited_total = b.cited_total = 1;
    a.cited_from_topk = b.cited_from_topk = 1;
    a.matched_ranks = {3};
    a.mean_rank = 3.0;
    b.matched_ranks = {5};
    b.mean_rank = 5.0;
    const auto agg = aggregate_selection({a, b});
    EXPECT_EQ(agg.mean_rank, 4.0);
    EXPECT_EQ(agg.rank_median, 4.0);
    EXPECT_NEAR(*agg.rank_sd, std::sqrt(2.0), 1e-12);
}

TEST(Aggregate, Errors) {
    EXPECT_THROW(aggregate_selection({}), ValidationError);
    try {
        aggregate_selection({with_counts(0, 0), with_counts(0, 0)});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), "all_undefined");
    }
}

// Independent statistics over the same lists: two-pass mean, sum of squared
// deviations, and nth_element median.
struct Brute {
    double mean, sd, median;
};
Brute brute(std::vector<double> xs) {
    long double s = 0;
    for (const double x : xs) s += x;
    const long double m = s / xs.size();
    long double ss = 0;
    for (const double x : xs) ss += (x - m) * (x - m);
    const auto n = xs.size();
    std::nth_element(xs.begin(), xs.begin() + n / 2, xs.end());
    double med = xs[n / 2];
    if (n % 2 == 0) {
        const double lo = *std::max_element(xs.begin(), xs.begin() + n / 2);
        med = 0.5 * (lo + med);
    }
    return {static_cast<double>(m), static_cast<double>(std::sqrt(ss / (n - 1))), med};
}

TEST(Aggregate, MatchesBruteForceOnFiftyQuestions) {
    std::mt19937_64 rng(50);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<SelectionStats> stats;
        std::vector<double> per_question, pooled;
        for (int q = 0; q < 50; ++q) {
            SelectionStats s;
            s.cited_total = rng() % 5;
            for (std::size_t i = 0; i < s.cited_total; ++i) {
                if (rng() % 3) s.matched_ranks.push_back(1 + rng() % 10);
            }
            s.cited_from_topk = s.matched_ranks.size();
            if (!s.matched_ranks.empty()) {
                s.mean_rank = std::accumulate(s.matched_ranks.begin(), s.matched_ranks.end(), 0.0) /
                              static_cast<double>(s.matched_ranks.size());
                per_question.push_back(*s.mean_rank);
                for (const auto r : s.matched_ranks) pooled.push_back(static_cast<double>(r));
            }
            stats.push_back(s);
        }
        const auto agg = aggregate_selection(stats);
        const auto b = brute(per_question);
        EXPECT_NEAR(*agg.mean_rank, b.mean, 1e-9);
        EXPECT_NEAR(*agg.rank_sd, b.sd, 1e-9);
        EXPECT_NEAR(*agg.rank_median, b.median, 1e-9);
        EXPECT_EQ(agg.rank_coverage, per_question.size());

        const auto pooled_agg = aggregate_selection(stats, RankUnit::Pooled);
        const auto bp = brute(pooled);
        EXPECT_NEAR(*pooled_agg.mean_rank, bp.mean, 1e-9);
        EXPECT_NEAR(*pooled_agg.rank_median, bp.median, 1e-9);

        // Permutation invariance.
        std::shuffle(stats.begin(), stats.end(), rng);
        const auto shuffled = aggregate_selection(stats);
        EXPECT_EQ(shuffled.overall_fraction, agg.overall_fraction);
        EXPECT_NEAR(*shuffled.mean_rank, *agg.mean_rank, 1e-12);
        EXPECT_EQ(shuffled.rank_median, agg.rank_median);
    }
}

}  // namespace
}  // namespace evr
