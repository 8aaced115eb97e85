#include "evr/reports.hpp"

#include <map>

#include "evr/annotation.hpp"
#include "evr/error.hpp"
#include "evr/references.hpp"

namespace evr {

json ScoredReference::to_json() const {
    return json{{"question_id", question_id}, {"mode", evr::to_string(mode)}, {"verdict", evr::to_json(verdict)}};
}

ScoredReference ScoredReference::from_json(const json& j) {
    ScoredReference s;
    s.question_id = j.at("question_id").get<std::string>();
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.verdict = verdict_from_json(j.at("verdict"));
    return s;
}

std::vector<ScoredReference> score_archive(const RunArchive& archive, const ReferenceMatcher& matcher,
                                           std::size_t n_top_refs, const ExternalResolver* external) {
    std::vector<ScoredReference> out;
    for (const auto& r : archive.results) {
        if (r.status != ResultStatus::Ok) continue;
        const auto block = parse_reference_block(r.answer_text);
        for (const auto& ref : top_n_references(block, n_top_refs)) {
            out.push_back({r.question_id, r.mode, verify_reference(ref, matcher, external)});
        }
    }
    return out;
}

json ScoreSummary::to_json() const {
    return json{{"theta", theta},
                {"n_top_refs", n_top_refs},
                {"catalog_fingerprint", catalog_fingerprint},
                {"references", references}};
}

ScoreSummary ScoreSummary::from_json(const json& j) {
    ScoreSummary s;
    s.theta = j.at("theta").get<double>();
    s.n_top_refs = j.value("n_top_refs", s.n_top_refs);
    s.catalog_fingerprint = j.value("catalog_fingerprint", "");
    s.references = j.value("references", std::size_t{0});
    return s;
}

std::vector<ScoredReference> score_run(const std::filesystem::path& run_dir, const ReferenceMatcher& matcher,
                                       std::size_t n_top_refs, const ExternalResolver* external) {
    const auto archive = RunArchive::load(run_dir);
    const auto fp = matcher.catalog().fingerprint();
    const auto& recorded = archive.manifest.value("catalog_fingerprint", json(nullptr));
    if (recorded.is_string() && recorded.get<std::string>() != fp) {
        throw ValidationError("catalog_mismatch", "run " + run_dir.string() + " was produced against catalog " +
                                                      recorded.get<std::string>() + ", not " + fp);
    }
    auto scored = score_archive(archive, matcher, n_top_refs, external);
    std::vector<json> rows;
    rows.reserve(scored.size());
    for (const auto& s : scored) rows.push_back(s.to_json());
    write_file_atomic(run_dir / "verdicts.jsonl", to_jsonl(rows));
    ScoreSummary summary{matcher.theta(), n_top_refs, fp, scored.size()};
    write_file_atomic(run_dir / "score.json", summary.to_json().dump(2) + "\n");
    return scored;
}

std::string_view to_string(ReportKind k) {
    switch (k) {
        case ReportKind::Factuality: return "factuality";
        case ReportKind::Selection: return "selection";
        case ReportKind::Ratings: return "ratings";
    }
    return "unknown";
}

ReportKind parse_report_kind(std::string_view s) {
    for (const auto k : {ReportKind::Factuality, ReportKind::Selection, ReportKind::Ratings}) {
        if (to_string(k) == s) return k;
    }
    throw ValidationError("invalid_report_kind", "unknown report kind '" + std::string(s) + "'");
}

namespace {

struct ScoredRun {
    ScoreSummary summary;
    std::vector<ScoredReference> verdicts;
};

ScoredRun load_scored(const std::filesystem::path& run_dir) {
    if (!std::filesystem::exists(run_dir / "score.json")) {
        throw NotFoundError("not_scored", "run " + run_dir.filename().string() + " has not been scored");
    }
    ScoredRun s;
    s.summary = ScoreSummary::from_json(json::parse(read_file(run_dir / "score.json")));
    for (const auto& row : read_jsonl(run_dir / "verdicts.jsonl")) s.verdicts.push_back(ScoredReference::from_json(row));
    return s;
}

std::string finish(const json& j, const std::string& text, ReportFormat f) {
    return f == ReportFormat::Json ? j.dump(2) + "\n" : text;
}

}  // namespace

std::string emit_report(ReportKind kind, const std::filesystem::path& run_dir,
                        const std::filesystem::path& annotation_root, const ReportOptions& options) {
    if (!std::filesystem::exists(run_dir / "manifest.json")) {
        throw NotFoundError("unknown_run", "no run '" + run_dir.filename().string() + "'");
    }
    switch (kind) {
        case ReportKind::Factuality: {
            const auto scored = load_scored(run_dir);
            std::map<Mode, std::vector<FactualityVerdict>> by_mode;
            for (const auto& s : scored.verdicts) by_mode[s.mode].push_back(s.verdict);
            const auto rep = factuality_report(by_mode, scored.summary.theta);
            return finish(rep.to_json(), rep.to_text(), options.format);
        }
        case ReportKind::Selection: {
            const auto archive = RunArchive::load(run_dir);
            const auto scored = load_scored(run_dir);
            std::map<std::string, std::vector<FactualityVerdict>> rag_verdicts;
            for (const auto& s : scored.verdicts) {
                if (s.mode == Mode::Rag) rag_verdicts[s.question_id].push_back(s.verdict);
            }
            std::vector<SelectionStats> stats;
            for (const auto& r : archive.results) {
                if (r.mode != Mode::Rag) continue;
                const auto it = rag_verdicts.find(r.question_id);
                stats.push_back(selection_stats(r, it == rag_verdicts.end() ? std::vector<FactualityVerdict>{}
                                                                            : it->second));
            }
            if (stats.empty()) throw ValidationError("not_applicable", "run has no rag results");
            const auto agg = aggregate_selection(stats, options.rank_unit);
            return finish(agg.to_json(), agg.to_text(), options.format);
        }
        case ReportKind::Ratings: {
            const auto manifest = json::parse(read_file(run_dir / "manifest.json"));
            const auto run_id = manifest.value("run_id", run_dir.filename().string());
            AnnotationStore store(annotation_root);
            std::vector<SessionPlan> plans;
            std::vector<Rating> ratings;
            for (auto& p : store.plans()) {
                if (p.run_id != run_id) continue;
                auto part = store.ratings(p.session_id);
                ratings.insert(ratings.end(), part.begin(), part.end());
                plans.push_back(std::move(p));
            }
            const auto rep = aggregate_ratings(ratings, plans, options.method, options.paired);
            return finish(rep.to_json(), rep.to_text(), options.format);
        }
    }
    throw ValidationError("invalid_report_kind", "unknown report kind");
}

}  // namespace evr
