#include "evr/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <set>

#include "CLI11.hpp"

#include "evr/annotation.hpp"
#include "evr/error.hpp"
#include "evr/factuality.hpp"
#include "evr/rag.hpp"
#include "evr/references.hpp"
#include "evr/reports.hpp"
#include "evr/service.hpp"
#include "evr/text.hpp"
#include "evr/tokenizer.hpp"

namespace evr {

namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

fs::path index_meta_path(const fs::path& index) { return fs::path(index.string() + ".meta.json"); }

// Everything needed to rebuild the retrieval side of a run from files.
struct LoadedRetrieval {
    std::unique_ptr<Catalog> catalog;
    std::unique_ptr<VectorIndex> index;
    std::unique_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<SnippetStore> snippets;

    RetrievalContext context() const { return {index.get(), embedder.get(), catalog.get(), snippets.get()}; }
};

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbeddingProviderSpec& spec, const std::string& url) {
    if (spec.provider_kind == ProviderKind::DeterministicLocal) {
        return std::make_unique<LocalHashEmbedder>(spec.dims, spec.model_name);
    }
    if (url.empty()) throw ValidationError("missing_endpoint", "remote embedder needs --embed-url");
    return std::make_unique<RemoteEmbedder>(HttpEndpoint{url, env_or("EVR_EMBED_TOKEN")}, spec.model_name, spec.dims);
}

LoadedRetrieval load_retrieval(const std::string& catalog_path, const std::string& index_path,
                               const std::string& embed_url) {
    LoadedRetrieval r;
    if (!catalog_path.empty()) r.catalog = std::make_unique<Catalog>(Catalog::load(catalog_path));
    if (index_path.empty()) return r;
    if (!fs::exists(index_path)) throw ValidationError("index_missing", "no index at " + index_path);
    if (!r.catalog) throw ValidationError("catalog_missing", "an index needs --catalog for snippet text");
    r.index = std::make_unique<VectorIndex>(VectorIndex::load(index_path));
    const auto meta = json::parse(read_file(index_meta_path(index_path)));
    if (meta.value("catalog_fingerprint", "") != r.catalog->fingerprint()) {
        throw ValidationError("catalog_mismatch", "index " + index_path + " was built from another catalog");
    }
    const auto tokenizer = make_tokenizer(meta.at("tokenizer").get<std::string>());
    r.snippets = std::make_unique<SnippetStore>(
        chunk_catalog(*r.catalog, meta.at("max_snippet_tokens").get<std::size_t>(), *tokenizer));
    r.embedder = make_embedder(r.index->spec(), embed_url);
    return r;
}

struct LlmFlags {
    std::string kind = "mock";
    std::string transcript;
    std::string url = "https://api.openai.com/v1";
    std::string model = "gpt-3.5-turbo-0613";
};

std::unique_ptr<LlmProvider> make_llm(const LlmFlags& f) {
    if (f.kind == "mock") {
        if (f.transcript.empty()) throw ValidationError("missing_transcript", "mock LLM needs --transcript");
        return std::make_unique<MockTranscriptProvider>(MockTranscriptProvider::load(f.transcript));
    }
    if (f.kind == "remote") {
        return std::make_unique<RemoteChatProvider>(HttpEndpoint{f.url, env_or("EVR_API_TOKEN")}, f.model);
    }
    throw ValidationError("invalid_provider", "unknown LLM provider '" + f.kind + "'");
}

void add_llm_flags(CLI::App* cmd, LlmFlags& f) {
    cmd->add_option("--llm", f.kind, "Language model provider")->check(CLI::IsMember({"mock", "remote"}))
        ->capture_default_str();
    cmd->add_option("--transcript", f.transcript, "Scripted answers for the mock provider (JSON object)");
    cmd->add_option("--llm-url", f.url, "Base URL of the chat completion API")->capture_default_str();
    cmd->add_option("--llm-model", f.model, "Chat model name")->capture_default_str();
}

std::string kind_counts(const CatalogManifest& m) {
    std::string s;
    for (const auto k : {SourceKind::JournalAbstract, SourceKind::PracticePatternPage, SourceKind::WikiArticle}) {
        const auto it = m.counts.find(k);
        s += std::string(to_string(k)) + " " + std::to_string(it == m.counts.end() ? 0 : it->second) + "\n";
    }
    s += "rejected " + std::to_string(m.rejected_count) + "\n";
    s += "total " + std::to_string(m.total()) + "\n";
    return s;
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void on_stop_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evidence-grounded RAG pipeline: ingest, index, run, score, annotate, serve", "evr"};
    app.set_config("--config", "", "TOML-style key = value file; flags override it");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string data_dir = env_or("EVR_DATA_DIR", "evr-data");
    app.add_option("--data-dir", data_dir, "Data directory (env EVR_DATA_DIR)")->capture_default_str();
    std::size_t jobs = 1;
    app.add_option("--jobs", jobs, "Worker cap for parallel stages")->check(CLI::PositiveNumber)->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate source records into a document catalog");
    std::vector<std::string> ingest_inputs;
    std::string ingest_out;
    int ingest_year = 0;
    ingest->add_option("--input", ingest_inputs, "JSONL source files")->required();
    ingest->add_option("--out", ingest_out, "Output directory (catalog.jsonl, manifest.json, rejections.jsonl)")
        ->required();
    ingest->add_option("--year", ingest_year, "Current year for the publication-year check (default: now)");

    // index
    auto* index = app.add_subcommand("index", "Chunk a catalog and embed it into a flat index");
    std::string idx_catalog, idx_out, idx_provider = "local", idx_model, idx_url, idx_tokenizer = "whitespace";
    std::size_t idx_dims = 0, idx_max_tokens = kDefaultMaxSnippetTokens;
    bool idx_append = false;
    index->add_option("--catalog", idx_catalog, "catalog.jsonl")->required();
    index->add_option("--out", idx_out, "Index file")->required();
    index->add_option("--provider", idx_provider, "Embedding provider")->check(CLI::IsMember({"local", "remote"}))
        ->capture_default_str();
    index->add_option("--model", idx_model, "Embedding model name");
    index->add_option("--dims", idx_dims, "Embedding width");
    index->add_option("--embed-url", idx_url, "Base URL of the embedding API");
    index->add_option("--max-tokens", idx_max_tokens, "Snippet size limit")->capture_default_str();
    index->add_option("--tokenizer", idx_tokenizer, "whitespace or chars:N")->capture_default_str();
    index->add_flag("--append", idx_append, "Add the catalog's snippets to an existing index");

    // run
    auto* run = app.add_subcommand("run", "Answer a question set with and without retrieval");
    std::string run_questions, run_catalog, run_index, run_out, run_id, run_embed_url;
    std::vector<std::string> run_modes{"no_rag", "rag"};
    LlmFlags run_llm;
    PipelineConfig run_cfg;
    run->add_option("--questions", run_questions, "Questions JSONL")->required();
    run->add_option("--modes", run_modes, "Conditions to run")->delimiter(',')->capture_default_str();
    run->add_option("--catalog", run_catalog, "catalog.jsonl");
    run->add_option("--index", run_index, "Index file (required for rag)");
    run->add_option("--embed-url", run_embed_url, "Embedding API for remote indexes");
    run->add_option("--out", run_out, "Run archive directory")->required();
    run->add_option("--run-id", run_id, "Run id (default: directory name)");
    run->add_option("--k", run_cfg.k_docs, "Documents per prompt")->capture_default_str();
    run->add_option("--temperature", run_cfg.temperature, "Sampling temperature")->capture_default_str();
    run->add_option("--context-budget", run_cfg.context_budget_tokens, "Prompt token budget")->capture_default_str();
    run->add_option("--max-output-tokens", run_cfg.max_output_tokens, "Answer token cap")->capture_default_str();
    run->add_option("--tokenizer", run_cfg.tokenizer, "Prompt budget tokenizer")->capture_default_str();
    run->add_option("--max-attempts", run_cfg.max_attempts, "Attempts per item on transport errors")
        ->capture_default_str();
    run->add_option("--retry-backoff-ms", run_cfg.retry_backoff_ms, "Backoff step between attempts")
        ->capture_default_str();
    add_llm_flags(run, run_llm);

    // score
    auto* score = app.add_subcommand("score", "Verify citations and write factuality / selection reports");
    std::string sc_run, sc_catalog, sc_venues = default_venue_table_path().string(), sc_rank_unit = "question";
    std::vector<std::string> sc_kinds;
    double sc_theta = kDefaultExistenceThreshold;
    std::size_t sc_top = 3;
    score->add_option("--run", sc_run, "Run archive directory")->required();
    score->add_option("--catalog", sc_catalog, "catalog.jsonl")->required();
    score->add_option("--kinds", sc_kinds, "factuality,selection (default: both, selection only with rag results)")
        ->delimiter(',');
    score->add_option("--theta", sc_theta, "Title similarity threshold")->capture_default_str();
    score->add_option("--n-top-refs", sc_top, "References scored per answer")->capture_default_str();
    score->add_option("--venues", sc_venues, "Journal abbreviation table")->capture_default_str();
    score->add_option("--rank-unit", sc_rank_unit, "Rank statistics over per-question means or pooled ranks")
        ->check(CLI::IsMember({"question", "pooled"}))->capture_default_str();

    // session
    auto* session = app.add_subcommand("session", "Blinded rating sessions");
    session->require_subcommand(1);
    auto* snew = session->add_subcommand("new", "Build shuffled, blinded session plans from a run");
    std::string sn_run, sn_questions, sn_store, sn_session_id, sn_out;
    std::vector<std::string> sn_annotators;
    std::uint64_t sn_seed = kDefaultSeed;
    std::size_t sn_per_topic = 0;
    snew->add_option("--run", sn_run, "Run archive directory")->required();
    snew->add_option("--annotator", sn_annotators, "Annotator id; one plan each")->required();
    snew->add_option("--questions", sn_questions, "Questions JSONL limiting the session (default: whole run)");
    snew->add_option("--per-topic", sn_per_topic, "Sample this many questions per topic (0 = all)");
    snew->add_option("--seed", sn_seed, "Shuffle seed; annotator i uses seed + i")->capture_default_str();
    snew->add_option("--store", sn_store, "Annotation directory (default: <data-dir>/annotation)");
    snew->add_option("--session-id", sn_session_id, "Explicit id (single annotator only)");
    snew->add_option("--out", sn_out, "Also write the server-side plan JSON here");
    auto* sexport = session->add_subcommand("export", "Export a rater view or the ratings of a session");
    std::string se_store, se_session, se_format = "rater", se_out;
    sexport->add_option("--store", se_store, "Annotation directory (default: <data-dir>/annotation)");
    sexport->add_option("--session", se_session, "Session id")->required();
    sexport->add_option("--format", se_format, "rater (blinded plan JSON) or csv (ratings)")
        ->check(CLI::IsMember({"rater", "csv"}))->capture_default_str();
    sexport->add_option("--out", se_out, "Output file (default: stdout)");

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "Rating means per condition with paired tests");
    std::string ag_run, ag_store, ag_method = "t_test", ag_format = "text", ag_out;
    std::vector<std::string> ag_ratings, ag_plans;
    std::uint64_t ag_seed = kDefaultSeed;
    aggregate->add_option("--run", ag_run, "Run directory; reads every session of that run from --store");
    aggregate->add_option("--store", ag_store, "Annotation directory (default: <data-dir>/annotation)");
    aggregate->add_option("--ratings", ag_ratings, "Rating logs (instead of --run)");
    aggregate->add_option("--plans", ag_plans, "Server-side plan files (with --ratings)");
    aggregate->add_option("--method", ag_method, "Paired test")
        ->check(CLI::IsMember({"t_test", "wilcoxon", "permutation"}))->capture_default_str();
    aggregate->add_option("--seed", ag_seed, "Seed for Monte Carlo permutation draws")->capture_default_str();
    aggregate->add_option("--format", ag_format, "text or json")->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    aggregate->add_option("--out", ag_out, "Also write the JSON report here");

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP API for asking, rating and reports");
    std::string sv_host = "127.0.0.1", sv_tokens, sv_store, sv_ui, sv_catalog, sv_index, sv_embed_url;
    int sv_port = 8080;
    LlmFlags sv_llm;
    serve->add_option("--host", sv_host, "Listen address")->capture_default_str();
    serve->add_option("--port", sv_port, "Listen port")->capture_default_str();
    serve->add_option("--tokens", sv_tokens, "Token file: 'annotator = token' per line")->required();
    serve->add_option("--store", sv_store, "Annotation directory (default: <data-dir>/annotation)");
    serve->add_option("--ui", sv_ui, "Directory served at /ui");
    serve->add_option("--catalog", sv_catalog, "catalog.jsonl for /api/ask");
    serve->add_option("--index", sv_index, "Index file for /api/ask in rag mode");
    serve->add_option("--embed-url", sv_embed_url, "Embedding API for remote indexes");
    add_llm_flags(serve, sv_llm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    const fs::path default_store = fs::path(data_dir) / "annotation";
    auto store_or_default = [&](const std::string& s) { return s.empty() ? default_store : fs::path(s); };

    try {
        if (ingest->parsed()) {
            std::string content;
            for (const auto& p : ingest_inputs) {
                content += read_file(p);
                if (!content.empty() && content.back() != '\n') content += '\n';
            }
            if (text::trim(content).empty()) throw ValidationError("empty_input", "input files contain no records");
            const auto now = system_clock()();
            const int year = ingest_year ? ingest_year : utc_year(now);
            auto build = ingest_jsonl_text(content, year);
            if (build.catalog.empty()) throw ValidationError("empty_catalog", "no record passed validation");
            const fs::path dir(ingest_out);
            fs::create_directories(dir);
            write_file_atomic(dir / "catalog.jsonl", build.catalog.to_jsonl());
            std::vector<json> rej;
            for (const auto& r : build.rejections) rej.push_back(r.to_json());
            write_file_atomic(dir / "rejections.jsonl", to_jsonl(rej));
            const auto manifest = build.catalog.manifest(build.rejections.size(), format_utc(now));
            write_file_atomic(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
            out << kind_counts(manifest);
            return 0;
        }

        if (index->parsed()) {
            const auto catalog = Catalog::load(idx_catalog);
            const auto tokenizer = make_tokenizer(idx_tokenizer);
            const auto snippets = chunk_catalog(catalog, idx_max_tokens, *tokenizer);
            EmbeddingProviderSpec spec;
            if (idx_provider == "local") {
                spec.provider_kind = ProviderKind::DeterministicLocal;
                if (!idx_model.empty()) spec.model_name = idx_model;
                if (index->count("--dims")) spec.dims = idx_dims;
            } else {
                spec.provider_kind = ProviderKind::RemoteApi;
                spec.model_name = idx_model.empty() ? "text-embedding-ada-002" : idx_model;
                const auto known = known_model_dims(spec.model_name);
                if (index->count("--dims")) {
                    if (known && *known != idx_dims) {
                        throw ValidationError("dims_mismatch", spec.model_name + " produces " +
                                                                   std::to_string(*known) + " dims, not " +
                                                                   std::to_string(idx_dims));
                    }
                    spec.dims = idx_dims;
                } else if (known) {
                    spec.dims = *known;
                } else {
                    throw ValidationError("dims_required", "--dims is required for model " + spec.model_name);
                }
            }
            if (spec.dims == 0) throw ValidationError("invalid_dims", "--dims must be positive");
            const auto provider = make_embedder(spec, idx_url);
            const fs::path out_path(idx_out);
            const auto meta_path = index_meta_path(out_path);
            json meta{{"max_snippet_tokens", idx_max_tokens},
                      {"tokenizer", idx_tokenizer},
                      {"catalog_fingerprint", catalog.fingerprint()}};
            if (idx_append) {
                auto idx = VectorIndex::load(out_path);
                if (idx.spec() != spec) {
                    throw ValidationError("provider_mismatch", "index holds " + idx.spec().describe() +
                                                                   " vectors, not " + spec.describe());
                }
                append_to_index(idx, snippets, *provider, jobs);
                idx.save(out_path);
                out << "snippets " << snippets.size() << " appended, " << idx.size() << " total\n";
            } else {
                const auto idx = build_index(snippets, *provider, jobs);
                if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
                idx.save(out_path);
                out << "snippets " << idx.size() << "\n";
            }
            meta["embedding"] = spec.describe();
            write_file_atomic(meta_path, meta.dump(2) + "\n");
            out << "provider " << spec.describe() << "\n";
            return 0;
        }

        if (run->parsed()) {
            const auto questions = load_questions(run_questions);
            std::set<Mode> modes;
            for (const auto& m : run_modes) modes.insert(parse_mode(m));
            if (modes.contains(Mode::Rag) && run_index.empty()) {
                throw ValidationError("index_missing", "rag mode needs --index");
            }
            run_cfg.jobs = jobs;
            run_cfg.validate();
            const auto retrieval = load_retrieval(run_catalog, run_index, run_embed_url);
            const auto llm = make_llm(run_llm);
            RunOptions opts;
            opts.run_id = run_id;
            opts.progress = &err;
            const auto archive =
                run_benchmark(questions, modes, *llm, retrieval.context(), run_cfg, run_out, opts);
            out << "results " << archive.results.size() << "\n";
            out << "failures " << archive.failures.size() << "\n";
            return 0;
        }

        if (score->parsed()) {
            const fs::path run_dir(sc_run);
            const auto archive = RunArchive::load(run_dir);
            const bool has_rag = std::any_of(archive.results.begin(), archive.results.end(),
                                             [](const auto& r) { return r.mode == Mode::Rag; });
            std::vector<ReportKind> kinds;
            if (sc_kinds.empty()) {
                kinds.push_back(ReportKind::Factuality);
                if (has_rag) kinds.push_back(ReportKind::Selection);
            } else {
                for (const auto& k : sc_kinds) {
                    const auto kind = parse_report_kind(k);
                    if (kind == ReportKind::Ratings) {
                        throw ValidationError("invalid_report_kind", "ratings come from 'aggregate', not 'score'");
                    }
                    kinds.push_back(kind);
                }
            }
            if (std::find(kinds.begin(), kinds.end(), ReportKind::Selection) != kinds.end() && !has_rag) {
                throw ValidationError("not_applicable", "selection needs rag results; the run has none");
            }
            const auto catalog = Catalog::load(sc_catalog);
            const ReferenceMatcher matcher(catalog, VenueTable::load(sc_venues), sc_theta);
            const auto scored = score_run(run_dir, matcher, sc_top);
            fs::create_directories(run_dir / "reports");
            ReportOptions opts;
            opts.rank_unit = sc_rank_unit == "pooled" ? RankUnit::Pooled : RankUnit::PerQuestionMean;
            for (const auto k : kinds) {
                const auto name = std::string(to_string(k));
                opts.format = ReportFormat::Json;
                write_file_atomic(run_dir / "reports" / (name + ".json"), emit_report(k, run_dir, {}, opts));
                opts.format = ReportFormat::Text;
                const auto txt = emit_report(k, run_dir, {}, opts);
                write_file_atomic(run_dir / "reports" / (name + ".txt"), txt);
                out << txt << "\n";
            }
            out << "references " << scored.size() << "\n";
            return 0;
        }

        if (snew->parsed()) {
            if (!sn_session_id.empty() && sn_annotators.size() != 1) {
                throw ValidationError("invalid_session_id", "--session-id needs exactly one --annotator");
            }
            const auto archive = RunArchive::load(sn_run);
            std::vector<std::string> qids;
            if (!sn_questions.empty() || sn_per_topic > 0) {
                std::vector<QuestionRecord> qs;
                if (!sn_questions.empty()) {
                    qs = load_questions(sn_questions);
                } else {
                    std::set<std::string> seen;
                    for (const auto& r : archive.results) {
                        if (seen.insert(r.question_id).second) qs.push_back({r.question_id, r.topic, r.question});
                    }
                }
                if (sn_per_topic > 0) {
                    qids = sample_questions(qs, sn_per_topic, sn_seed);
                } else {
                    for (const auto& q : qs) qids.push_back(q.question_id);
                }
            } else {
                std::set<std::string> seen;
                for (const auto& r : archive.results) {
                    if (seen.insert(r.question_id).second) qids.push_back(r.question_id);
                }
            }
            AnnotationStore store(store_or_default(sn_store));
            out << "seed " << sn_seed << "\n";
            for (std::size_t i = 0; i < sn_annotators.size(); ++i) {
                const auto plan = build_blinded_session(qids, archive, sn_annotators[i], sn_seed + i, sn_session_id);
                store.save_plan(plan);
                if (!sn_out.empty()) {
                    const fs::path p = sn_annotators.size() == 1
                                           ? fs::path(sn_out)
                                           : fs::path(sn_out) / (plan.session_id + ".json");
                    if (p.has_parent_path()) fs::create_directories(p.parent_path());
                    write_file_atomic(p, plan.to_server_json().dump(2) + "\n");
                }
                out << "session " << plan.session_id << " annotator " << plan.annotator_id << " items "
                    << plan.items.size() << "\n";
            }
            return 0;
        }

        if (sexport->parsed()) {
            AnnotationStore store(store_or_default(se_store));
            std::string content;
            if (se_format == "rater") {
                content = store.plan(se_session).to_rater_json().dump(2) + "\n";
            } else {
                store.plan(se_session);
                content = ratings_to_csv(store.ratings(se_session));
            }
            if (se_out.empty()) {
                out << content;
            } else {
                write_file_atomic(se_out, content);
            }
            return 0;
        }

        if (aggregate->parsed()) {
            ReportOptions opts;
            opts.method = stats::parse_method(ag_method);
            opts.paired.seed = ag_seed;
            std::string json_report, text_report;
            if (!ag_run.empty()) {
                if (!ag_ratings.empty()) throw ValidationError("conflicting_flags", "use --run or --ratings, not both");
                opts.format = ReportFormat::Json;
                json_report = emit_report(ReportKind::Ratings, ag_run, store_or_default(ag_store), opts);
                opts.format = ReportFormat::Text;
                text_report = emit_report(ReportKind::Ratings, ag_run, store_or_default(ag_store), opts);
            } else {
                if (ag_ratings.empty() || ag_plans.empty()) {
                    throw ValidationError("missing_input", "aggregate needs --run, or --ratings with --plans");
                }
                std::vector<Rating> log;
                for (const auto& p : ag_ratings) {
                    if (!fs::exists(p)) throw ValidationError("unreadable_input", "cannot read " + p);
                    auto part = load_rating_log(p);
                    log.insert(log.end(), part.begin(), part.end());
                }
                std::vector<SessionPlan> plans;
                for (const auto& p : ag_plans) plans.push_back(SessionPlan::from_server_json(json::parse(read_file(p))));
                const auto rep = aggregate_ratings(effective_ratings(log), plans, opts.method, opts.paired);
                json_report = rep.to_json().dump(2) + "\n";
                text_report = rep.to_text();
            }
            if (!ag_out.empty()) write_file_atomic(ag_out, json_report);
            out << (ag_format == "json" ? json_report : text_report);
            return 0;
        }

        if (serve->parsed()) {
            ServiceContext ctx;
            ctx.data_dir = data_dir;
            ctx.annotation_root = store_or_default(sv_store);
            ctx.tokens = TokenTable::load(sv_tokens);
            const auto retrieval = load_retrieval(sv_catalog, sv_index, sv_embed_url);
            std::unique_ptr<LlmProvider> llm;
            if (sv_llm.kind == "remote" || !sv_llm.transcript.empty()) llm = make_llm(sv_llm);
            ctx.llm = llm.get();
            ctx.retrieval = retrieval.context();
            ctx.config.jobs = jobs;
            Service service(std::move(ctx));
            HttpServer server(service, sv_ui.empty() ? std::nullopt : std::optional<fs::path>(sv_ui));
            const int port = server.bind(sv_host, sv_port);
            g_server = &server;
            std::signal(SIGTERM, on_stop_signal);
            std::signal(SIGINT, on_stop_signal);
            err << "listening on " << sv_host << ":" << port << "\n";
            server.run();
            g_server = nullptr;
            std::signal(SIGTERM, SIG_DFL);
            std::signal(SIGINT, SIG_DFL);
            err << "stopped\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const NotFoundError& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const ForbiddenError& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: malformed_json: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: internal_error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace evr
