#include "evr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "evr/error.hpp"
#include "evr/rag.hpp"

namespace evr {

namespace {

json opt(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double sample_sd(const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double ss = 0.0;
    for (const double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

json SelectionStats::to_json() const {
    return json{{"question_id", question_id},         {"cited_total", cited_total},
                {"cited_from_topk", cited_from_topk}, {"selected_fraction", opt(selected_fraction)},
                {"matched_ranks", matched_ranks},     {"mean_rank", opt(mean_rank)}};
}

SelectionStats selection_stats(const std::string& question_id, const std::vector<RetrievalHit>& hits_used,
                               const std::vector<FactualityVerdict>& verdicts) {
    std::unordered_map<std::string, std::size_t> rank_of;
    for (const auto& h : hits_used) rank_of.emplace(h.doc_id, h.rank);

    SelectionStats s;
    s.question_id = question_id;
    s.cited_total = verdicts.size();
    for (const auto& v : verdicts) {
        if (!v.evidence.matched_doc_id) continue;
        const auto it = rank_of.find(*v.evidence.matched_doc_id);
        if (it == rank_of.end()) continue;
        s.matched_ranks.push_back(it->second);
    }
    s.cited_from_topk = s.matched_ranks.size();
    if (s.cited_total > 0) {
        s.selected_fraction = static_cast<double>(s.cited_from_topk) / static_cast<double>(s.cited_total);
    }
    if (!s.matched_ranks.empty()) {
        const double sum = std::accumulate(s.matched_ranks.begin(), s.matched_ranks.end(), 0.0);
        s.mean_rank = sum / static_cast<double>(s.matched_ranks.size());
    }
    return s;
}

SelectionStats selection_stats(const GenerationResult& result, const std::vector<FactualityVerdict>& verdicts) {
    if (result.mode != Mode::Rag) {
        throw ValidationError("not_applicable", "selection metrics apply to rag results only (" +
                                                    result.question_id + " is no_rag)");
    }
    return selection_stats(result.question_id, result.hits_used, verdicts);
}

SelectionAggregate aggregate_selection(const std::vector<SelectionStats>& stats, RankUnit unit) {
    if (stats.empty()) throw ValidationError("empty_input", "no selection stats to aggregate");
    SelectionAggregate agg;
    agg.rank_unit = unit;
    agg.per_question = stats;
    agg.questions = stats.size();
    std::vector<double> rank_obs;
    for (const auto& s : stats) {
        agg.cited_total += s.cited_total;
        agg.cited_from_topk += s.cited_from_topk;
        if (s.cited_total > 0) ++agg.questions_with_citations;
        if (unit == RankUnit::PerQuestionMean) {
            if (s.mean_rank) rank_obs.push_back(*s.mean_rank);
        } else {
            for (const auto r : s.matched_ranks) rank_obs.push_back(static_cast<double>(r));
        }
    }
    if (agg.cited_total == 0) {
        throw ValidationError("all_undefined", "no question cited any reference; selection fraction is undefined");
    }
    agg.overall_fraction = static_cast<double>(agg.cited_from_topk) / static_cast<double>(agg.cited_total);
    agg.rank_coverage = rank_obs.size();
    if (!rank_obs.empty()) {
        agg.mean_rank = mean_of(rank_obs);
        agg.rank_median = median_of(rank_obs);
        if (rank_obs.size() >= 2) agg.rank_sd = sample_sd(rank_obs);
    }
    return agg;
}

json SelectionAggregate::to_json() const {
    json per = json::array();
    for (const auto& s : per_question) per.push_back(s.to_json());
    return json{{"kind", "selection"},
                {"overall_fraction", overall_fraction},
                {"cited_total", cited_total},
                {"cited_from_topk", cited_from_topk},
                {"mean_rank", opt(mean_rank)},
                {"rank_sd", opt(rank_sd)},
                {"rank_median", opt(rank_median)},
                {"rank_unit", rank_unit == RankUnit::PerQuestionMean ? "per_question_mean" : "pooled"},
                {"questions", questions},
                {"questions_with_citations", questions_with_citations},
                {"rank_coverage", rank_coverage},
                {"per_question", per}};
}

std::string SelectionAggregate::to_text() const {
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", *v);
        return std::string(buf);
    };
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "Selected from top-k     %.1f%% (%zu of %zu cited references)\n",
                  100.0 * overall_fraction, cited_from_topk, cited_total);
    os << buf;
    os << "Mean rank (sd)          " << fmt(mean_rank) << " (" << fmt(rank_sd) << ")\n";
    os << "Median rank             " << fmt(rank_median) << '\n';
    if (rank_unit == RankUnit::PerQuestionMean) {
        std::snprintf(buf, sizeof buf, "Rank unit               per-question mean, %zu of %zu questions\n",
                      rank_coverage, questions);
    } else {
        std::snprintf(buf, sizeof buf, "Rank unit               pooled, %zu ranks over %zu questions\n", rank_coverage,
                      questions);
    }
    os << buf;
    return os.str();
}

}  // namespace evr
