#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "evr/factuality.hpp"
#include "evr/rag.hpp"
#include "evr/selection.hpp"
#include "evr/stats.hpp"

namespace evr {

// One verified citation of one archived answer.
struct ScoredReference {
    std::string question_id;
    Mode mode = Mode::NoRag;
    FactualityVerdict verdict;

    json to_json() const;
    static ScoredReference from_json(const json& j);
};

// Parses every answer's reference block, keeps the first n_top_refs entries
// and verifies each against the catalog. Results are in archive order.
std::vector<ScoredReference> score_archive(const RunArchive& archive, const ReferenceMatcher& matcher,
                                           std::size_t n_top_refs, const ExternalResolver* external = nullptr);

// Files a scored run directory holds next to the archive:
//   verdicts.jsonl, score.json, reports/<kind>.json, reports/<kind>.txt
struct ScoreSummary {
    double theta = kDefaultExistenceThreshold;
    std::size_t n_top_refs = 3;
    std::string catalog_fingerprint;
    std::size_t references = 0;

    json to_json() const;
    static ScoreSummary from_json(const json& j);
};

// Throws ValidationError("catalog_mismatch") when the archive was produced
// against a different catalog. Writes verdicts.jsonl and score.json.
std::vector<ScoredReference> score_run(const std::filesystem::path& run_dir, const ReferenceMatcher& matcher,
                                       std::size_t n_top_refs, const ExternalResolver* external = nullptr);

enum class ReportKind { Factuality, Selection, Ratings };
enum class ReportFormat { Json, Text };

std::string_view to_string(ReportKind k);
// Throws ValidationError("invalid_report_kind").
ReportKind parse_report_kind(std::string_view s);

struct ReportOptions {
    ReportFormat format = ReportFormat::Json;
    RankUnit rank_unit = RankUnit::PerQuestionMean;
    stats::PairedMethod method = stats::PairedMethod::TTest;
    stats::PairedOptions paired;
};

// Single source of every report's bytes; the CLI and the HTTP service both
// call this. Factuality and selection read the scored run directory,
// ratings read the sessions under `annotation_root` whose plan names this
// run. Throws NotFoundError("unknown_run" / "not_scored"),
// ValidationError("not_applicable") for selection without rag results and
// ValidationError("empty_input") for ratings with nothing rated.
std::string emit_report(ReportKind kind, const std::filesystem::path& run_dir,
                        const std::filesystem::path& annotation_root, const ReportOptions& options = {});

}  // namespace evr
