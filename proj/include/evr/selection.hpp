#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evr/factuality.hpp"
#include "evr/vector_index.hpp"

namespace evr {

struct GenerationResult;

struct SelectionStats {
    std::string question_id;
    std::size_t cited_total = 0;
    std::size_t cited_from_topk = 0;
    std::optional<double> selected_fraction;  // undefined when nothing was cited
    std::vector<std::size_t> matched_ranks;
    std::optional<double> mean_rank;          // undefined when nothing matched

    json to_json() const;
};

// Unit over which rank mean / sd / median are taken.
enum class RankUnit { PerQuestionMean, Pooled };

struct SelectionAggregate {
    double overall_fraction = 0.0;  // sum(cited_from_topk) / sum(cited_total)
    std::size_t cited_total = 0;
    std::size_t cited_from_topk = 0;
    std::optional<double> mean_rank;
    std::optional<double> rank_sd;  // sample sd, needs >= 2 observations
    std::optional<double> rank_median;
    RankUnit rank_unit = RankUnit::PerQuestionMean;
    std::size_t questions = 0;
    std::size_t questions_with_citations = 0;
    std::size_t rank_coverage = 0;  // questions (or ranks, when pooled) feeding the rank statistics
    std::vector<SelectionStats> per_question;

    json to_json() const;
    std::string to_text() const;
};

// A cited reference counts as selected from the top-k when its matched doc
// id equals the doc id of one of the document-level hits; its rank is that
// hit's rank. Throws ValidationError("not_applicable") for no_rag results.
SelectionStats selection_stats(const GenerationResult& result, const std::vector<FactualityVerdict>& verdicts);
SelectionStats selection_stats(const std::string& question_id, const std::vector<RetrievalHit>& hits_used,
                               const std::vector<FactualityVerdict>& verdicts);

// Throws ValidationError("empty_input") on an empty list and
// ValidationError("all_undefined") when no question cited anything.
SelectionAggregate aggregate_selection(const std::vector<SelectionStats>& stats,
                                       RankUnit unit = RankUnit::PerQuestionMean);

}  // namespace evr
