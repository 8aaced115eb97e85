#include <gtest/gtest.h>

#include <thread>

#include "evr/error.hpp"
#include "evr/reports.hpp"
#include "evr/service.hpp"
#include "httplib.h"
#include "test_support.hpp"

namespace evr {
namespace {

TEST(HttpStatus, Mapping) {
    EXPECT_EQ(http_status(ValidationError("x", "")), 400);
    EXPECT_EQ(http_status(ValidationError("score_out_of_range", "")), 422);
    EXPECT_EQ(http_status(ValidationError("index_missing", "")), 409);
    EXPECT_EQ(http_status(ForbiddenError("unauthorized", "")), 401);
    EXPECT_EQ(http_status(ForbiddenError("foreign_session", "")), 403);
    EXPECT_EQ(http_status(NotFoundError("unknown_run", "")), 404);
    EXPECT_EQ(http_status(TransportError("provider_unavailable", "")), 502);
    EXPECT_EQ(http_status(TransportError("provider_timeout", "", true)), 504);
    const auto r = error_response(404, "unknown_run", "no run 'x'");
    EXPECT_EQ(r.status, 404);
    EXPECT_EQ(json::parse(r.body).at("code"), "unknown_run");
}

TEST(Tokens, ParseAndAuthenticate) {
    const auto t = TokenTable::parse("# raters\nann-1 = tok-a\n\nann-2=tok-b  \n");
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.authenticate("Bearer tok-a"), "ann-1");
    EXPECT_EQ(t.authenticate("Bearer tok-b"), "ann-2");
    EXPECT_FALSE(t.authenticate("Bearer nope"));
    EXPECT_FALSE(t.authenticate("tok-a"));
    EXPECT_FALSE(t.authenticate(""));
    EXPECT_THROW(TokenTable::parse("just-a-token\n"), ValidationError);
    EXPECT_THROW(TokenTable::parse("a = t\nb = t\n"), ValidationError);
    EXPECT_THROW(TokenTable::parse("# nothing\n"), ValidationError);
}

class ServiceTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new testing::TempDir();
        run_ = new testing::E2eRun(testing::make_e2e_run(dir_->path()));
    }
    static void TearDownTestSuite() {
        delete run_;
        delete dir_;
    }

    ServiceTest()
        : catalog_(Catalog::load(run_->catalog)),
          index_(VectorIndex::load(run_->index)),
          snippets_(chunk_catalog(catalog_, 1024, WhitespaceTokenizer{})),
          llm_(MockTranscriptProvider::load(testing::fixture("e2e/transcript.json"))) {
        ServiceContext ctx;
        ctx.data_dir = dir_->path();
        ctx.annotation_root = store_dir_.path();
        ctx.tokens = TokenTable::parse("ann-1 = t1\nann-2 = t2\n");
        ctx.llm = &llm_;
        ctx.retrieval = {&index_, &embedder_, &catalog_, &snippets_};
        service_ = std::make_unique<Service>(std::move(ctx));

        const auto archive = RunArchive::load(run_->run_dir);
        std::vector<std::string> qids{"q1", "q2"};
        plan_ = build_blinded_session(qids, archive, "ann-1", 9, "s-ann-1");
        service_->store().save_plan(plan_);
    }

    static testing::TempDir* dir_;
    static testing::E2eRun* run_;
    testing::TempDir store_dir_;
    Catalog catalog_;
    VectorIndex index_;
    LocalHashEmbedder embedder_;
    SnippetStore snippets_;
    MockTranscriptProvider llm_;
    std::unique_ptr<Service> service_;
    SessionPlan plan_;
};
testing::TempDir* ServiceTest::dir_ = nullptr;
testing::E2eRun* ServiceTest::run_ = nullptr;

TEST_F(ServiceTest, AuthIsRequiredExceptHealthz) {
    EXPECT_EQ(service_->healthz().status, 200);
    EXPECT_EQ(service_->next_item("", "s-ann-1").status, 401);
    EXPECT_EQ(service_->next_item("Bearer bad", "s-ann-1").status, 401);
    EXPECT_EQ(service_->ask("", R"({"question":"x"})").status, 401);
    EXPECT_EQ(service_->report("", "e2e", "factuality").status, 401);
    EXPECT_EQ(service_->submit_rating("", "{}").status, 401);
}

TEST_F(ServiceTest, NextItemIsBlindedAndOrdered) {
    const auto r = service_->next_item("Bearer t1", "s-ann-1");
    ASSERT_EQ(r.status, 200);
    const auto j = json::parse(r.body);
    EXPECT_EQ(j.at("item_id"), plan_.items[0].item_id);
    EXPECT_EQ(j.at("position"), 1);
    EXPECT_EQ(j.at("total"), 4);
    EXPECT_EQ(j.at("remaining"), 4);
    EXPECT_TRUE(blinding_violations(j).empty());
    EXPECT_EQ(service_->next_item("Bearer t2", "s-ann-1").status, 403);
    EXPECT_EQ(service_->next_item("Bearer t1", "s-none").status, 404);
}

TEST_F(ServiceTest, RatingLifecycle) {
    auto submit = [&](const std::string& item, const std::string& axis, int score) {
        return service_->submit_rating(
            "Bearer t1",
            json{{"session_id", "s-ann-1"}, {"item_id", item}, {"axis", axis}, {"score", score}}.dump());
    };
    const auto& first = plan_.items[0].item_id;
    EXPECT_EQ(submit(first, "accuracy", 9).status, 422);
    EXPECT_EQ(submit(first, "vibes", 3).status, 400);
    EXPECT_EQ(submit("nope", "accuracy", 3).status, 404);
    EXPECT_EQ(service_->submit_rating("Bearer t1", "{not json").status, 400);
    EXPECT_EQ(service_->submit_rating("Bearer t2", json{{"session_id", "s-ann-1"},
                                                        {"item_id", first},
                                                        {"axis", "accuracy"},
                                                        {"score", 3}}
                                                      .dump())
                  .status,
              403);

    const auto ok = submit(first, "accuracy", 3);
    ASSERT_EQ(ok.status, 200);
    EXPECT_EQ(json::parse(ok.body), (json{{"ok", true}, {"superseded", false}, {"remaining", 4}}));
    EXPECT_TRUE(json::parse(submit(first, "accuracy", 4).body).at("superseded").get<bool>());

    for (const auto& item : plan_.items) {
        for (const char* axis : {"accuracy", "completeness", "attribution"}) ASSERT_EQ(submit(item.item_id, axis, 3).status, 200);
    }
    const auto done = service_->next_item("Bearer t1", "s-ann-1");
    EXPECT_EQ(done.status, 204);
    EXPECT_TRUE(done.body.empty());
    EXPECT_EQ(service_->store().ratings("s-ann-1").size(), 12u);
}

TEST_F(ServiceTest, ReportsMatchCliBytes) {
    const auto r = service_->report("Bearer t1", "e2e", "factuality");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body, read_file(run_->run_dir / "reports/factuality.json"));
    EXPECT_EQ(service_->report("Bearer t1", "e2e", "selection").body,
              read_file(run_->run_dir / "reports/selection.json"));
    EXPECT_EQ(service_->report("Bearer t1", "e2e", "bogus").status, 400);
    EXPECT_EQ(service_->report("Bearer t1", "missing", "factuality").status, 404);
    EXPECT_EQ(service_->report("Bearer t1", "../e2e", "factuality").status, 404);
}

TEST_F(ServiceTest, AskUsesRetrievalAndParsesReferences) {
    const auto r = service_->ask("Bearer t1", json{{"question", "q"}, {"question_id", "q1"}, {"mode", "rag"}}.dump());
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = json::parse(r.body);
    EXPECT_EQ(j.at("hits_used").size(), catalog_.size() < 10 ? catalog_.size() : 10u);
    EXPECT_FALSE(j.at("references").empty());
    EXPECT_FALSE(j.contains("topic"));
    EXPECT_EQ(service_->ask("Bearer t1", R"({"question":"  "})").status, 400);
    EXPECT_EQ(service_->ask("Bearer t1", R"({"question":"x","k":0})").status, 400);
    EXPECT_EQ(service_->ask("Bearer t1", R"({"question":"x","question_id":"unscripted","mode":"no_rag"})").status,
              502);
}

TEST_F(ServiceTest, LiveServerRoutes) {
    HttpServer server(*service_);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread t([&] { server.run(); });
    httplib::Client cli("127.0.0.1", port);
    cli.set_connection_timeout(5);

    auto health = cli.Get("/api/healthz");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);

    const httplib::Headers auth{{"Authorization", "Bearer t1"}};
    auto next = cli.Get("/api/sessions/s-ann-1/next", auth);
    ASSERT_TRUE(next);
    EXPECT_EQ(next->status, 200);
    EXPECT_TRUE(blinding_violations(std::string_view(next->body)).empty());

    auto rating = cli.Post("/api/ratings", auth,
                           json{{"session_id", "s-ann-1"},
                                {"item_id", plan_.items[0].item_id},
                                {"axis", "completeness"},
                                {"score", 5}}
                               .dump(),
                           "application/json");
    ASSERT_TRUE(rating);
    EXPECT_EQ(rating->status, 200);

    auto report = cli.Get("/api/reports/e2e/factuality", auth);
    ASSERT_TRUE(report);
    EXPECT_EQ(report->status, 200);
    EXPECT_EQ(report->body, read_file(run_->run_dir / "reports/factuality.json"));

    auto unauthorized = cli.Get("/api/reports/e2e/factuality");
    ASSERT_TRUE(unauthorized);
    EXPECT_EQ(unauthorized->status, 401);

    HttpServer clash(*service_);
    try {
        clash.bind("127.0.0.1", port);
        ADD_FAILURE() << "second bind succeeded";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "port_in_use");
    }

    server.stop();
    t.join();
}

}  // namespace
}  // namespace evr
