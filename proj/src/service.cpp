#include "evr/service.hpp"

#include "httplib.h"

#include "evr/references.hpp"
#include "evr/reports.hpp"
#include "evr/text.hpp"

namespace evr {

int http_status(const Error& e) {
    if (dynamic_cast<const ForbiddenError*>(&e)) return e.code() == "unauthorized" ? 401 : 403;
    if (dynamic_cast<const NotFoundError*>(&e)) return 404;
    if (const auto* t = dynamic_cast<const TransportError*>(&e)) return t->timeout() ? 504 : 502;
    if (dynamic_cast<const ValidationError*>(&e)) {
        if (e.code() == "score_out_of_range") return 422;
        if (e.code() == "index_missing") return 409;
        return 400;
    }
    return 502;
}

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
    return {status, json{{"status", status}, {"code", code}, {"message", message}}.dump(), "application/json"};
}

namespace {

ApiResponse ok_json(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

template <typename F>
ApiResponse guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return error_response(http_status(e), e.code(), e.what());
    } catch (const json::exception& e) {
        return error_response(400, "malformed_json", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal_error", e.what());
    }
}

json parse_body(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed_json", "request body is not a JSON object");
    return j;
}

bool safe_id(std::string_view id) {
    if (id.empty() || id.size() > 128 || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    });
}

}  // namespace

void TokenTable::add(const std::string& annotator, const std::string& token) {
    if (annotator.empty() || token.empty()) throw ValidationError("bad_token_file", "empty annotator or token");
    if (!by_token_.emplace(token, annotator).second) {
        throw ValidationError("bad_token_file", "token for " + annotator + " is already assigned");
    }
}

TokenTable TokenTable::parse(std::string_view content) {
    TokenTable t;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(content)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("bad_token_file", "line " + std::to_string(line_no) + ": expected 'annotator = token'");
        }
        const auto who = std::string(text::trim(line.substr(0, eq)));
        const auto token = std::string(text::trim(line.substr(eq + 1)));
        if (who.empty() || token.empty() || token.find_first_of(" \t") != std::string::npos) {
            throw ValidationError("bad_token_file", "line " + std::to_string(line_no) + ": expected 'annotator = token'");
        }
        t.add(who, token);
    }
    if (t.size() == 0) throw ValidationError("bad_token_file", "token file defines no tokens");
    return t;
}

TokenTable TokenTable::load(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ValidationError("bad_token_file", "cannot read token file " + path.string());
    }
    return parse(read_file(path));
}

std::optional<std::string> TokenTable::authenticate(std::string_view authorization) const {
    constexpr std::string_view kScheme = "Bearer ";
    if (!text::starts_with_icase(authorization, kScheme)) return std::nullopt;
    const auto token = std::string(text::trim(authorization.substr(kScheme.size())));
    const auto it = by_token_.find(token);
    if (it == by_token_.end()) return std::nullopt;
    return it->second;
}

Service::Service(ServiceContext ctx) : ctx_(std::move(ctx)), store_(ctx_.annotation_root) {}

std::string Service::require_annotator(std::string_view authorization) const {
    auto who = ctx_.tokens.authenticate(authorization);
    if (!who) throw ForbiddenError("unauthorized", "missing or unknown bearer token");
    return *who;
}

ApiResponse Service::ask(std::string_view authorization, std::string_view body) const {
    return guarded([&] {
        require_annotator(authorization);
        const auto j = parse_body(body);
        if (!j.contains("question") || !j["question"].is_string() ||
            text::trim(j["question"].get_ref<const std::string&>()).empty()) {
            throw ValidationError("empty_question", "question must be a non-empty string");
        }
        const auto mode = parse_mode(j.value("mode", "rag"));
        auto config = ctx_.config;
        if (j.contains("k")) {
            if (!j["k"].is_number_integer() || j["k"].get<long long>() <= 0) {
                throw ValidationError("invalid_k", "k must be a positive integer");
            }
            config.k_docs = j["k"].get<std::size_t>();
        }
        if (!ctx_.llm) throw Error("provider_unavailable", "no language model configured");
        QuestionRecord q;
        q.text = j["question"].get<std::string>();
        q.question_id = j.value("question_id", "ask-" + hex64(stable_hash(q.text)));
        const auto result = answer_question(q, mode, *ctx_.llm, ctx_.retrieval, config);
        auto view = result.to_json();
        view.erase("topic");
        json refs = json::array();
        for (const auto& r : parse_reference_block(result.answer_text).entries) refs.push_back(to_json(r));
        view["references"] = refs;
        return ok_json(view);
    });
}

ApiResponse Service::next_item(std::string_view authorization, const std::string& session_id) {
    return guarded([&] {
        const auto who = require_annotator(authorization);
        const auto item = store_.next_item(who, session_id);
        if (!item) return ApiResponse{204, "", "application/json"};
        const auto total = store_.plan(session_id).items.size();
        auto view = item->to_rater_json(total);
        view["remaining"] = store_.remaining(session_id);
        return ok_json(view);
    });
}

ApiResponse Service::submit_rating(std::string_view authorization, std::string_view body) {
    return guarded([&] {
        const auto who = require_annotator(authorization);
        const auto j = parse_body(body);
        for (const char* key : {"session_id", "item_id", "axis"}) {
            if (!j.contains(key) || !j[key].is_string()) {
                throw ValidationError("malformed_rating", std::string("missing string field '") + key + "'");
            }
        }
        if (!j.contains("score") || !j["score"].is_number_integer()) {
            throw ValidationError("malformed_rating", "score must be an integer");
        }
        const auto score = j["score"].get<long long>();
        if (score < kScoreMin || score > kScoreMax) {
            throw ValidationError("score_out_of_range", "score " + std::to_string(score) + " outside 1..5");
        }
        const auto ack = store_.record(who, j["session_id"].get<std::string>(), j["item_id"].get<std::string>(),
                                       parse_axis(j["axis"].get<std::string>()), static_cast<int>(score));
        return ok_json(json{{"ok", true}, {"superseded", ack.superseded}, {"remaining", ack.remaining}});
    });
}

ApiResponse Service::report(std::string_view authorization, const std::string& run_id, const std::string& kind) const {
    return guarded([&] {
        require_annotator(authorization);
        const auto k = parse_report_kind(kind);
        if (!safe_id(run_id)) throw NotFoundError("unknown_run", "no run '" + run_id + "'");
        return ApiResponse{200, emit_report(k, ctx_.data_dir / "runs" / run_id, ctx_.annotation_root),
                           "application/json"};
    });
}

ApiResponse Service::healthz() const { return ok_json(json{{"status", "ok"}}); }

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    explicit Impl(Service& s) : service(s) {}
};

namespace {

std::string auth_header(const httplib::Request& req) { return req.get_header_value("Authorization"); }

void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    if (r.status != 204) res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(Service& service, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;
    // httplib also sets SO_REUSEPORT, which lets a second server share the
    // port silently instead of failing with port_in_use.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    srv.Get("/api/healthz", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.healthz()); });
    srv.Post("/api/ask", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.ask(auth_header(req), req.body));
    });
    srv.Get(R"(/api/sessions/([^/]+)/next)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.next_item(auth_header(req), req.matches[1]));
    });
    srv.Post("/api/ratings", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.submit_rating(auth_header(req), req.body));
    });
    srv.Get(R"(/api/reports/([^/]+)/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.report(auth_header(req), req.matches[1], req.matches[2]));
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404) {
            const auto r = error_response(404, "not_found", "no such route");
            res.set_content(r.body, r.content_type);
        }
    });
    if (ui_dir) {
        if (!srv.set_mount_point("/ui", ui_dir->string())) {
            throw ValidationError("bad_ui_dir", "cannot serve " + ui_dir->string());
        }
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        const int bound = srv.bind_to_any_port(host);
        if (bound <= 0) throw Error("port_in_use", "cannot bind " + host);
        return bound;
    }
    if (!srv.bind_to_port(host, port)) {
        throw Error("port_in_use", "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace evr
