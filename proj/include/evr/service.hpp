#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "evr/annotation.hpp"
#include "evr/error.hpp"
#include "evr/rag.hpp"

namespace evr {

struct ApiResponse {
    int status = 200;
    std::string body;  // empty for 204
    std::string content_type = "application/json";
};

// Status for an error raised while serving: validation 400 (422 for an
// out-of-range score, 409 for a missing index), auth 401/403, not found 404,
// provider and other library errors 502 (504 on timeout), unexpected
// exceptions 500.
int http_status(const Error& e);
ApiResponse error_response(int status, std::string_view code, std::string_view message);

// Static bearer tokens, one "annotator = token" per line; '#' comments.
class TokenTable {
public:
    void add(const std::string& annotator, const std::string& token);
    // Throws ValidationError("bad_token_file") on malformed lines,
    // duplicate tokens or a file without any token.
    static TokenTable load(const std::filesystem::path& path);
    static TokenTable parse(std::string_view content);

    // Annotator for an "Authorization: Bearer <token>" header value.
    std::optional<std::string> authenticate(std::string_view authorization) const;
    std::size_t size() const { return by_token_.size(); }

private:
    std::map<std::string, std::string> by_token_;
};

struct ServiceContext {
    std::filesystem::path data_dir;  // runs live under <data_dir>/runs/<run_id>
    std::filesystem::path annotation_root;
    TokenTable tokens;
    const LlmProvider* llm = nullptr;
    RetrievalContext retrieval;
    PipelineConfig config;
};

// Transport-independent handlers; the HTTP server only routes to these.
class Service {
public:
    explicit Service(ServiceContext ctx);

    // POST /api/ask  {question, mode = "rag", k = config.k_docs, question_id?}
    ApiResponse ask(std::string_view authorization, std::string_view body) const;
    // GET /api/sessions/{id}/next
    ApiResponse next_item(std::string_view authorization, const std::string& session_id);
    // POST /api/ratings  {session_id, item_id, axis, score}
    ApiResponse submit_rating(std::string_view authorization, std::string_view body);
    // GET /api/reports/{run_id}/{kind}
    ApiResponse report(std::string_view authorization, const std::string& run_id, const std::string& kind) const;
    // GET /api/healthz
    ApiResponse healthz() const;

    AnnotationStore& store() { return store_; }
    const ServiceContext& context() const { return ctx_; }

private:
    std::string require_annotator(std::string_view authorization) const;

    ServiceContext ctx_;
    AnnotationStore store_;
};

// HTTP/1.1 front end. Rater pages, when given, are served under /ui.
class HttpServer {
public:
    HttpServer(Service& service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
    ~HttpServer();

    // Binds or throws Error("port_in_use"). Returns the bound port (useful with port 0).
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace evr
