#include <gtest/gtest.h>

#include "evr/annotation.hpp"
#include "evr/error.hpp"
#include "evr/reports.hpp"
#include "test_support.hpp"

namespace evr {
namespace {

class ScoredRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new testing::TempDir();
        run_ = new testing::E2eRun(testing::make_e2e_run(dir_->path()));
    }
    static void TearDownTestSuite() {
        delete run_;
        delete dir_;
    }
    static testing::TempDir* dir_;
    static testing::E2eRun* run_;
};
testing::TempDir* ScoredRun::dir_ = nullptr;
testing::E2eRun* ScoredRun::run_ = nullptr;

TEST_F(ScoredRun, VerdictsMatchPlantedLabels) {
    const auto expected = json::parse(read_file(testing::fixture("e2e/expected_labels.json")));
    const auto rows = read_jsonl(run_->run_dir / "verdicts.jsonl");
    ASSERT_EQ(rows.size(), expected.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto s = ScoredReference::from_json(rows[i]);
        EXPECT_EQ(s.question_id, expected[i].at("question_id"));
        EXPECT_EQ(to_string(s.mode), expected[i].at("mode").get<std::string>());
        EXPECT_EQ(s.verdict.reference.ref_index, expected[i].at("ref_index").get<std::size_t>());
        EXPECT_EQ(to_string(s.verdict.label), expected[i].at("label").get<std::string>())
            << s.verdict.reference.raw_text;
    }
}

TEST_F(ScoredRun, FactualityReportTotals) {
    const auto j = json::parse(emit_report(ReportKind::Factuality, run_->run_dir, dir_->path() / "annotation"));
    EXPECT_EQ(j.at("kind"), "factuality");
    EXPECT_EQ(j.at("theta"), 0.85);
    const auto& no_rag = j.at("by_mode").at("no_rag").at("counts");
    EXPECT_EQ(no_rag.at("correct"), 2);
    EXPECT_EQ(no_rag.at("minor_error"), 4);
    EXPECT_EQ(no_rag.at("hallucinated"), 5);
    EXPECT_EQ(j.at("by_mode").at("rag").at("counts").at("correct"), 10);
    EXPECT_EQ(j.at("overall").at("total"), 21);
}

TEST_F(ScoredRun, EmittedBytesEqualStoredReports) {
    for (const auto kind : {ReportKind::Factuality, ReportKind::Selection}) {
        const auto name = std::string(to_string(kind));
        EXPECT_EQ(emit_report(kind, run_->run_dir, dir_->path() / "annotation"),
                  read_file(run_->run_dir / "reports" / (name + ".json")));
        ReportOptions text;
        text.format = ReportFormat::Text;
        EXPECT_EQ(emit_report(kind, run_->run_dir, dir_->path() / "annotation", text),
                  read_file(run_->run_dir / "reports" / (name + ".txt")));
    }
}

TEST_F(ScoredRun, SelectionReport) {
    const auto j = json::parse(emit_report(ReportKind::Selection, run_->run_dir, dir_->path() / "annotation"));
    EXPECT_EQ(j.at("kind"), "selection");
    EXPECT_EQ(j.at("cited_total"), 10);
    EXPECT_EQ(j.at("cited_from_topk"), 10);
    EXPECT_DOUBLE_EQ(j.at("overall_fraction").get<double>(), 1.0);
    EXPECT_EQ(j.at("questions"), 5);
    for (const auto& q : j.at("per_question")) {
        for (const auto& r : q.at("matched_ranks")) {
            EXPECT_GE(r.get<int>(), 1);
            EXPECT_LE(r.get<int>(), 10);
        }
    }
}

TEST_F(ScoredRun, ErrorsForMissingOrUnscoredRuns) {
    try {
        emit_report(ReportKind::Factuality, dir_->path() / "runs" / "nope", dir_->path());
        FAIL();
    } catch (const NotFoundError& e) {
        EXPECT_EQ(e.code(), "unknown_run");
    }
    testing::TempDir other;
    const auto unscored = testing::make_e2e_run(other.path(), "raw", false);
    try {
        emit_report(ReportKind::Factuality, unscored.run_dir, other.path());
        FAIL();
    } catch (const NotFoundError& e) {
        EXPECT_EQ(e.code(), "not_scored");
    }
    EXPECT_THROW(parse_report_kind("histogram"), ValidationError);
}

TEST_F(ScoredRun, CatalogMismatchIsRejected) {
    Catalog other;
    Document d;
    d.doc_id = "pm-other";
    d.title = "Other";
    d.body = "b";
    other.add(d);
    const ReferenceMatcher matcher(other, VenueTable{});
    try {
        score_run(run_->run_dir, matcher, 3);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.code(), "catalog_mismatch");
    }
}

TEST_F(ScoredRun, ScoreArchiveKeepsTopThree) {
    const auto archive = RunArchive::load(run_->run_dir);
    const auto catalog = Catalog::load(run_->catalog);
    const ReferenceMatcher matcher(catalog, VenueTable::load(default_venue_table_path()));
    const auto one = score_archive(archive, matcher, 1);
    const auto three = score_archive(archive, matcher, 3);
    EXPECT_LT(one.size(), three.size());
    for (const auto& s : three) EXPECT_LE(s.verdict.reference.ref_index, 3u);
}

TEST_F(ScoredRun, RatingsReportUsesSessionsOfThisRun) {
    testing::TempDir store_dir;
    AnnotationStore store(store_dir.path());
    const auto archive = RunArchive::load(run_->run_dir);
    std::vector<std::string> qids;
    for (const auto& r : archive.results) {
        if (r.mode == Mode::NoRag) qids.push_back(r.question_id);
    }
    EXPECT_THROW(emit_report(ReportKind::Ratings, run_->run_dir, store_dir.path()), ValidationError);
    for (const std::string ann : {"ann-1", "ann-2"}) {
        const auto plan = build_blinded_session(qids, archive, ann, 3);
        store.save_plan(plan);
        for (const auto& item : plan.items) {
            for (const auto axis : kAllAxes) {
                store.record(ann, plan.session_id, item.item_id, axis, item.condition == Mode::Rag ? 4 : 3);
            }
        }
    }
    RunArchive foreign = archive;
    foreign.manifest["run_id"] = "another-run";
    store.save_plan(build_blinded_session(qids, foreign, "ann-3", 3));

    const auto j = json::parse(emit_report(ReportKind::Ratings, run_->run_dir, store_dir.path()));
    EXPECT_EQ(j.at("kind"), "ratings");
    EXPECT_EQ(j.at("annotators"), 2);
    EXPECT_EQ(j.at("ratings"), 2 * 10 * 3);
    const auto& acc = j.at("rows").at(0).at("axes").at("accuracy");
    EXPECT_EQ(acc.at("no_rag").at("mean"), 3.0);
    EXPECT_EQ(acc.at("rag").at("mean"), 4.0);
    EXPECT_EQ(acc.at("comparison").at("degenerate"), true);
    EXPECT_EQ(acc.at("comparison").at("p_value"), 0.0);
}

}  // namespace
}  // namespace evr
