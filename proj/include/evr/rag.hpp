#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evr/corpus.hpp"
#include "evr/embedding.hpp"
#include "evr/mode.hpp"
#include "evr/vector_index.hpp"

namespace evr {

enum class Topic { Retina, Glaucoma, Cataract, DryEye, Uveitis };

std::string_view to_string(Topic t);
Topic parse_topic(std::string_view s);

struct QuestionRecord {
    std::string question_id;
    Topic topic = Topic::Retina;
    std::string text;
};

json to_json(const QuestionRecord& q);
QuestionRecord question_from_json(const json& j);
// JSONL with {question_id, topic, text}; ids must be unique, text non-empty.
std::vector<QuestionRecord> load_questions(const std::filesystem::path& path);

// The single instruction used for both conditions.
inline constexpr std::string_view kInstruction =
    "Answer this question and provide references at the end of your response. "
    "The references should adhere to the AMA format.";

struct PipelineConfig {
    std::size_t k_docs = 10;
    std::size_t n_top_refs = 3;
    std::size_t max_snippet_tokens = kDefaultMaxSnippetTokens;
    double temperature = 0.0;
    std::size_t context_budget_tokens = 16384;
    std::size_t max_output_tokens = 1024;
    std::string tokenizer = "whitespace";
    std::size_t max_attempts = 3;
    std::size_t retry_backoff_ms = 500;
    std::size_t jobs = 1;

    // The rating scale is fixed; it is part of the config so that it is
    // archived with every run.
    static constexpr int kRatingMin = 1;
    static constexpr int kRatingMax = 5;

    void validate() const;
    json to_json() const;
    static PipelineConfig from_json(const json& j);
};

struct ContextBlock {
    std::size_t rank = 0;
    std::string doc_id;
    std::string title;
    std::string venue;
    std::optional<int> year;
    std::string snippet_text;
};

struct PromptBundle {
    std::string instruction{kInstruction};
    std::vector<ContextBlock> context_blocks;
    std::string question;
    Mode mode = Mode::NoRag;

    // instruction, blank line, "[rank] title - venue (year)\n<snippet>" blocks
    // separated by blank lines, blank line, "Question: <text>".
    std::string render() const;
};

// Read-only state needed for rag mode; any member may be null for no_rag.
struct RetrievalContext {
    const VectorIndex* index = nullptr;
    const EmbeddingProvider* embedder = nullptr;
    const Catalog* catalog = nullptr;
    const SnippetStore* snippets = nullptr;
};

// no_rag when `hits` is absent. Throws ValidationError("unknown_doc_id") for
// a hit outside the catalog and ValidationError("context_overflow") when the
// rendered prompt exceeds config.context_budget_tokens.
PromptBundle build_prompt(const QuestionRecord& question, const std::optional<std::vector<RetrievalHit>>& hits,
                          const RetrievalContext& ctx, const PipelineConfig& config);

struct GenerationRequest {
    std::string prompt;
    double temperature = 0.0;
    std::size_t max_output_tokens = 1024;
    std::string key;  // "question_id/mode"; only scripted providers look at it
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string name() const = 0;
    virtual std::string generate(const GenerationRequest& request) const = 0;
};

// Replays answers from a transcript: a JSON object mapping
// "question_id/mode" to answer text. A missing key raises
// Error("transcript_missing").
class MockTranscriptProvider final : public LlmProvider {
public:
    explicit MockTranscriptProvider(std::map<std::string, std::string> transcript, std::string name = "mock-transcript");
    static MockTranscriptProvider load(const std::filesystem::path& path);

    std::string name() const override { return name_; }
    std::string generate(const GenerationRequest& request) const override;

private:
    std::map<std::string, std::string> transcript_;
    std::string name_;
};

// OpenAI-compatible chat completion: POST {base}/chat/completions.
class RemoteChatProvider final : public LlmProvider {
public:
    RemoteChatProvider(HttpEndpoint endpoint, std::string model = "gpt-3.5-turbo-0613");

    std::string name() const override { return model_; }
    std::string generate(const GenerationRequest& request) const override;

private:
    HttpEndpoint endpoint_;
    std::string model_;
};

enum class ResultStatus { Ok, EmptyAnswer };

struct GenerationResult {
    std::string question_id;
    Topic topic = Topic::Retina;
    std::string question;
    Mode mode = Mode::NoRag;
    std::string answer_text;
    std::optional<std::string> references_block_raw;
    std::vector<RetrievalHit> hits_used;
    std::string provider_name;
    double temperature = 0.0;
    ResultStatus status = ResultStatus::Ok;

    json to_json() const;
    static GenerationResult from_json(const json& j);
};

std::string make_transcript_key(std::string_view question_id, Mode mode);

// Full ranking of every snippet, collapsed to the best k_docs documents.
std::vector<RetrievalHit> retrieve_documents(std::string_view query, const RetrievalContext& ctx, std::size_t k_docs);

// Transport errors from the provider propagate. Throws
// ValidationError("index_missing") for rag mode without an index.
GenerationResult answer_question(const QuestionRecord& question, Mode mode, const LlmProvider& llm,
                                 const RetrievalContext& ctx, const PipelineConfig& config);

struct RunFailure {
    std::string question_id;
    Mode mode = Mode::NoRag;
    std::string code;
    std::string message;
    bool retriable = false;
    std::size_t attempts = 0;

    json to_json() const;
    static RunFailure from_json(const json& j);
};

struct RunArchive {
    std::filesystem::path dir;
    json manifest;
    std::vector<GenerationResult> results;
    std::vector<RunFailure> failures;

    static RunArchive load(const std::filesystem::path& dir);
};

struct RunOptions {
    std::string run_id;  // defaults to the directory name
    Clock clock = system_clock();
    std::ostream* progress = nullptr;
};

// Writes <out_dir>/results.jsonl (one result per line, question order then
// canonical mode order, appended as soon as every earlier item is done),
// failures.jsonl and manifest.json. Per-item failures never abort the run.
RunArchive run_benchmark(const std::vector<QuestionRecord>& questions, const std::set<Mode>& modes,
                         const LlmProvider& llm, const RetrievalContext& ctx, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, const RunOptions& options = {});

}  // namespace evr
