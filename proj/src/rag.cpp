#include "evr/rag.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "evr/error.hpp"
#include "evr/references.hpp"
#include "evr/text.hpp"

namespace evr {

std::string_view to_string(Topic t) {
    switch (t) {
        case Topic::Retina: return "retina";
        case Topic::Glaucoma: return "glaucoma";
        case Topic::Cataract: return "cataract";
        case Topic::DryEye: return "dry_eye";
        case Topic::Uveitis: return "uveitis";
    }
    return "unknown";
}

Topic parse_topic(std::string_view s) {
    for (const auto t : {Topic::Retina, Topic::Glaucoma, Topic::Cataract, Topic::DryEye, Topic::Uveitis}) {
        if (to_string(t) == s) return t;
    }
    throw ValidationError("invalid_topic", "unknown topic '" + std::string(s) + "'");
}

json to_json(const QuestionRecord& q) {
    return json{{"question_id", q.question_id}, {"topic", to_string(q.topic)}, {"text", q.text}};
}

QuestionRecord question_from_json(const json& j) {
    QuestionRecord q;
    q.question_id = j.at("question_id").get<std::string>();
    q.topic = parse_topic(j.at("topic").get<std::string>());
    q.text = j.at("text").get<std::string>();
    if (q.question_id.empty()) throw ValidationError("missing_question_id", "question without an id");
    if (text::trim(q.text).empty()) throw ValidationError("empty_question", "question " + q.question_id + " has no text");
    return q;
}

std::vector<QuestionRecord> load_questions(const std::filesystem::path& path) {
    std::vector<QuestionRecord> out;
    std::unordered_set<std::string> ids;
    for (const auto& row : read_jsonl(path)) {
        try {
            out.push_back(question_from_json(row));
        } catch (const json::exception& e) {
            throw ValidationError("malformed_question", path.string() + ": " + e.what());
        }
        if (!ids.insert(out.back().question_id).second) {
            throw ValidationError("duplicate_question_id", "duplicate question id " + out.back().question_id);
        }
    }
    return out;
}

void PipelineConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ValidationError("invalid_config", std::string(name) + " must be positive");
    };
    positive(k_docs, "k_docs");
    positive(n_top_refs, "n_top_refs");
    positive(max_snippet_tokens, "max_snippet_tokens");
    positive(context_budget_tokens, "context_budget_tokens");
    positive(max_output_tokens, "max_output_tokens");
    positive(max_attempts, "max_attempts");
    positive(jobs, "jobs");
    if (!(temperature >= 0.0)) throw ValidationError("invalid_config", "temperature must be >= 0");
    make_tokenizer(tokenizer);
}

json PipelineConfig::to_json() const {
    return json{{"k_docs", k_docs},
                {"n_top_refs", n_top_refs},
                {"max_snippet_tokens", max_snippet_tokens},
                {"temperature", temperature},
                {"context_budget_tokens", context_budget_tokens},
                {"max_output_tokens", max_output_tokens},
                {"tokenizer", tokenizer},
                {"rating_scale", json::array({kRatingMin, kRatingMax})}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    c.k_docs = j.value("k_docs", c.k_docs);
    c.n_top_refs = j.value("n_top_refs", c.n_top_refs);
    c.max_snippet_tokens = j.value("max_snippet_tokens", c.max_snippet_tokens);
    c.temperature = j.value("temperature", c.temperature);
    c.context_budget_tokens = j.value("context_budget_tokens", c.context_budget_tokens);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.tokenizer = j.value("tokenizer", c.tokenizer);
    return c;
}

std::string PromptBundle::render() const {
    std::string out = instruction;
    out += "\n\n";
    for (const auto& b : context_blocks) {
        out += "[" + std::to_string(b.rank) + "] " + b.title + " - " + b.venue;
        if (b.year) out += " (" + std::to_string(*b.year) + ")";
        out += '\n';
        out += text::trim(b.snippet_text);
        out += "\n\n";
    }
    out += "Question: ";
    out += question;
    return out;
}

PromptBundle build_prompt(const QuestionRecord& question, const std::optional<std::vector<RetrievalHit>>& hits,
                          const RetrievalContext& ctx, const PipelineConfig& config) {
    PromptBundle p;
    p.question = question.text;
    p.mode = hits ? Mode::Rag : Mode::NoRag;
    if (hits) {
        if (hits->empty()) throw ValidationError("no_context", "rag prompt needs at least one retrieved document");
        if (!ctx.catalog) throw ValidationError("catalog_missing", "rag prompt needs a catalog");
        auto ordered = *hits;
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const RetrievalHit& a, const RetrievalHit& b) { return a.rank < b.rank; });
        for (const auto& h : ordered) {
            const auto* doc = ctx.catalog->find(h.doc_id);
            if (!doc) throw ValidationError("unknown_doc_id", "retrieved doc id " + h.doc_id + " is not in the catalog");
            ContextBlock b;
            b.rank = h.rank;
            b.doc_id = doc->doc_id;
            b.title = doc->title;
            b.venue = doc->venue;
            b.year = doc->year;
            const Snippet* sn = ctx.snippets ? ctx.snippets->find(h.snippet_id) : nullptr;
            b.snippet_text = sn ? sn->text : doc->body;
            p.context_blocks.push_back(std::move(b));
        }
    }
    const auto tokenizer = make_tokenizer(config.tokenizer);
    const auto size = tokenizer->count(p.render());
    if (size > config.context_budget_tokens) {
        throw ValidationError("context_overflow", "prompt for " + question.question_id + " is " + std::to_string(size) +
                                                      " tokens, budget is " +
                                                      std::to_string(config.context_budget_tokens));
    }
    return p;
}

MockTranscriptProvider::MockTranscriptProvider(std::map<std::string, std::string> transcript, std::string name)
    : transcript_(std::move(transcript)), name_(std::move(name)) {}

MockTranscriptProvider MockTranscriptProvider::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed_transcript", path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError("malformed_transcript", path.string() + " is not a JSON object");
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw ValidationError("malformed_transcript", "value of '" + k + "' is not a string");
        m.emplace(k, v.get<std::string>());
    }
    return MockTranscriptProvider(std::move(m));
}

std::string MockTranscriptProvider::generate(const GenerationRequest& request) const {
    const auto it = transcript_.find(request.key);
    if (it == transcript_.end()) throw Error("transcript_missing", "no transcript entry for " + request.key);
    return it->second;
}

RemoteChatProvider::RemoteChatProvider(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

std::string RemoteChatProvider::generate(const GenerationRequest& request) const {
    const json body{{"model", model_},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_output_tokens},
                    {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
    const auto res = post_json(endpoint_, "/chat/completions", body);
    try {
        const auto& content = res.at("choices").at(0).at("message").at("content");
        return content.is_string() ? content.get<std::string>() : std::string{};
    } catch (const json::exception& e) {
        throw Error("provider_bad_response", std::string("chat response without choices[0].message.content: ") + e.what());
    }
}

json GenerationResult::to_json() const {
    json hits = json::array();
    for (const auto& h : hits_used) hits.push_back(evr::to_json(h));
    return json{{"question_id", question_id},
                {"topic", evr::to_string(topic)},
                {"question", question},
                {"mode", evr::to_string(mode)},
                {"answer_text", answer_text},
                {"references_block_raw", references_block_raw ? json(*references_block_raw) : json(nullptr)},
                {"hits_used", hits},
                {"provider_name", provider_name},
                {"temperature", temperature},
                {"status", status == ResultStatus::Ok ? "ok" : "empty_answer"}};
}

GenerationResult GenerationResult::from_json(const json& j) {
    GenerationResult r;
    r.question_id = j.at("question_id").get<std::string>();
    r.topic = parse_topic(j.at("topic").get<std::string>());
    r.question = j.value("question", "");
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.answer_text = j.at("answer_text").get<std::string>();
    if (j.contains("references_block_raw") && j["references_block_raw"].is_string())
        r.references_block_raw = j["references_block_raw"].get<std::string>();
    for (const auto& h : j.at("hits_used")) r.hits_used.push_back(hit_from_json(h));
    r.provider_name = j.value("provider_name", "");
    r.temperature = j.value("temperature", 0.0);
    r.status = j.value("status", "ok") == "ok" ? ResultStatus::Ok : ResultStatus::EmptyAnswer;
    return r;
}

std::string make_transcript_key(std::string_view question_id, Mode mode) {
    return std::string(question_id) + "/" + std::string(to_string(mode));
}

std::vector<RetrievalHit> retrieve_documents(std::string_view query, const RetrievalContext& ctx, std::size_t k_docs) {
    if (!ctx.index || ctx.index->empty()) throw ValidationError("index_missing", "rag mode needs a non-empty index");
    if (!ctx.embedder) throw ValidationError("embedder_missing", "rag mode needs an embedding provider");
    return dedupe_to_documents(retrieve_top_k(query, *ctx.index, *ctx.embedder, ctx.index->size()), k_docs);
}

GenerationResult answer_question(const QuestionRecord& question, Mode mode, const LlmProvider& llm,
                                 const RetrievalContext& ctx, const PipelineConfig& config) {
    GenerationResult r;
    r.question_id = question.question_id;
    r.topic = question.topic;
    r.question = question.text;
    r.mode = mode;
    r.provider_name = llm.name();
    r.temperature = config.temperature;

    std::optional<std::vector<RetrievalHit>> hits;
    if (mode == Mode::Rag) {
        hits = retrieve_documents(question.text, ctx, config.k_docs);
        r.hits_used = *hits;
    }
    const auto prompt = build_prompt(question, hits, ctx, config);
    r.answer_text = llm.generate({prompt.render(), config.temperature, config.max_output_tokens,
                                  make_transcript_key(question.question_id, mode)});
    if (text::trim(r.answer_text).empty()) {
        r.status = ResultStatus::EmptyAnswer;
        return r;
    }
    const auto block = extract_reference_block(r.answer_text);
    if (block.found) r.references_block_raw = block.raw_block;
    return r;
}

json RunFailure::to_json() const {
    return json{{"question_id", question_id}, {"mode", to_string(mode)}, {"code", code},
                {"message", message},         {"retriable", retriable},  {"attempts", attempts}};
}

RunFailure RunFailure::from_json(const json& j) {
    RunFailure f;
    f.question_id = j.at("question_id").get<std::string>();
    f.mode = parse_mode(j.at("mode").get<std::string>());
    f.code = j.value("code", "");
    f.message = j.value("message", "");
    f.retriable = j.value("retriable", false);
    f.attempts = j.value("attempts", std::size_t{0});
    return f;
}

RunArchive RunArchive::load(const std::filesystem::path& dir) {
    RunArchive a;
    a.dir = dir;
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw NotFoundError("unknown_run", "no run archive at " + dir.string());
    }
    try {
        a.manifest = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed_manifest", manifest_path.string() + ": " + e.what());
    }
    for (const auto& row : read_jsonl(dir / "results.jsonl")) a.results.push_back(GenerationResult::from_json(row));
    if (std::filesystem::exists(dir / "failures.jsonl")) {
        for (const auto& row : read_jsonl(dir / "failures.jsonl")) a.failures.push_back(RunFailure::from_json(row));
    }
    return a;
}

namespace {

struct WorkItem {
    const QuestionRecord* question;
    Mode mode;
};

struct Outcome {
    std::optional<GenerationResult> result;
    std::optional<RunFailure> failure;
};

Outcome run_item(const WorkItem& item, const LlmProvider& llm, const RetrievalContext& ctx,
                 const PipelineConfig& config) {
    Outcome out;
    RunFailure f;
    f.question_id = item.question->question_id;
    f.mode = item.mode;
    for (std::size_t attempt = 1; attempt <= config.max_attempts; ++attempt) {
        f.attempts = attempt;
        try {
            out.result = answer_question(*item.question, item.mode, llm, ctx, config);
            return out;
        } catch (const TransportError& e) {
            f.code = e.code();
            f.message = e.what();
            f.retriable = true;
            if (attempt < config.max_attempts && config.retry_backoff_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(config.retry_backoff_ms * attempt));
            }
        } catch (const Error& e) {
            f.code = e.code();
            f.message = e.what();
            f.retriable = false;
            break;
        } catch (const std::exception& e) {
            f.code = "internal_error";
            f.message = e.what();
            f.retriable = false;
            break;
        }
    }
    out.failure = std::move(f);
    return out;
}

}  // namespace

RunArchive run_benchmark(const std::vector<QuestionRecord>& questions, const std::set<Mode>& modes,
                         const LlmProvider& llm, const RetrievalContext& ctx, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const RunOptions& options) {
    if (questions.empty()) throw ValidationError("empty_input", "question list is empty");
    if (modes.empty()) throw ValidationError("empty_input", "no modes requested");
    config.validate();
    if (modes.contains(Mode::Rag) && (!ctx.index || ctx.index->empty())) {
        throw ValidationError("index_missing", "rag mode requested without an index");
    }
    const auto results_path = out_dir / "results.jsonl";
    if (std::filesystem::exists(results_path)) {
        throw ValidationError("archive_exists", results_path.string() + " already exists; runs are append-only");
    }
    std::filesystem::create_directories(out_dir);
    const auto failures_path = out_dir / "failures.jsonl";
    write_file_atomic(results_path, "");
    write_file_atomic(failures_path, "");
    const auto created_at = format_utc(options.clock());

    std::vector<WorkItem> items;
    for (const auto& q : questions) {
        for (const auto m : kAllModes) {
            if (modes.contains(m)) items.push_back({&q, m});
        }
    }

    std::vector<std::optional<Outcome>> slots(items.size());
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::clamp<std::size_t>(config.jobs, 1, items.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < items.size(); i = next++) {
                auto outcome = run_item(items[i], llm, ctx, config);
                {
                    std::lock_guard lock(mu);
                    slots[i] = std::move(outcome);
                }
                cv.notify_all();
            }
        });
    }

    // Single writer: append in item order regardless of completion order.
    RunArchive archive;
    archive.dir = out_dir;
    for (std::size_t i = 0; i < items.size(); ++i) {
        Outcome outcome;
        {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return slots[i].has_value(); });
            outcome = std::move(*slots[i]);
            slots[i].reset();
        }
        const bool ok = outcome.result.has_value();
        if (ok) {
            append_line_durable(results_path, outcome.result->to_json().dump());
            archive.results.push_back(std::move(*outcome.result));
        } else {
            append_line_durable(failures_path, outcome.failure->to_json().dump());
            archive.failures.push_back(std::move(*outcome.failure));
        }
        if (options.progress) {
            *options.progress << "[" << (i + 1) << "/" << items.size() << "] " << items[i].question->question_id << " "
                              << to_string(items[i].mode) << (ok ? " ok" : " FAILED") << '\n';
        }
    }
    pool.clear();

    json mode_list = json::array();
    for (const auto m : kAllModes) {
        if (modes.contains(m)) mode_list.push_back(to_string(m));
    }
    json embedder = nullptr;
    if (ctx.embedder) {
        const auto& s = ctx.embedder->spec();
        embedder = json{{"provider_kind", to_string(s.provider_kind)}, {"model_name", s.model_name}, {"dims", s.dims}};
    }
    archive.manifest = json{
        {"run_id", options.run_id.empty() ? out_dir.filename().string() : options.run_id},
        {"created_at", created_at},
        {"config", config.to_json()},
        {"llm_provider", llm.name()},
        {"embedding_provider", embedder},
        {"catalog_fingerprint", ctx.catalog ? json(ctx.catalog->fingerprint()) : json(nullptr)},
        {"index_size", ctx.index ? json(ctx.index->size()) : json(nullptr)},
        {"modes", mode_list},
        {"counts", json{{"questions", questions.size()},
                        {"items", items.size()},
                        {"results", archive.results.size()},
                        {"failures", archive.failures.size()}}},
    };
    write_file_atomic(out_dir / "manifest.json", archive.manifest.dump(2) + "\n");
    return archive;
}

}  // namespace evr
