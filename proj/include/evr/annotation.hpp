#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "evr/io.hpp"
#include "evr/mode.hpp"
#include "evr/rag.hpp"
#include "evr/stats.hpp"

namespace evr {

enum class Axis { Accuracy, Completeness, Attribution };
inline constexpr std::array<Axis, 3> kAllAxes = {Axis::Accuracy, Axis::Completeness, Axis::Attribution};

std::string_view to_string(Axis a);
Axis parse_axis(std::string_view s);
std::string axis_label(Axis a);  // "Accuracy", "Completeness", "Evidence attribution"

inline constexpr int kScoreMin = PipelineConfig::kRatingMin;
inline constexpr int kScoreMax = PipelineConfig::kRatingMax;

struct AnnotationItem {
    std::string item_id;
    std::string question_id;
    Topic topic = Topic::Retina;
    Mode condition = Mode::NoRag;  // server side only
    std::size_t display_order = 0;  // 1-based
    std::string question;
    std::string presented_text;

    json to_server_json() const;
    static AnnotationItem from_server_json(const json& j);
    // What a rater sees. Carries no condition, topic or run provenance.
    json to_rater_json(std::size_t total) const;
};

struct SessionPlan {
    std::string session_id;
    std::string annotator_id;
    std::uint64_t seed = 0;
    std::string run_id;
    std::vector<AnnotationItem> items;  // sorted by display_order

    const AnnotationItem* find(std::string_view item_id) const;

    json to_server_json() const;
    static SessionPlan from_server_json(const json& j);
    json to_rater_json() const;
};

// Uniform draw in [0, bound) by rejection, so the sequence depends only on
// the engine output and not on the standard library's distributions.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);
// Fisher-Yates, last index first.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded_draw(rng, i)]);
}

// 2 x |questions| items in a seeded order. Every question needs a result
// for both conditions in the archive; otherwise ValidationError("incomplete_pairs")
// lists each gap. An empty session_id is derived from run, annotator and seed.
SessionPlan build_blinded_session(const std::vector<std::string>& question_ids, const RunArchive& archive,
                                  const std::string& annotator_id, std::uint64_t seed,
                                  std::string session_id = {});

// Up to `per_topic` questions from each topic, drawn with the seed, returned
// in the input order.
std::vector<std::string> sample_questions(const std::vector<QuestionRecord>& questions, std::size_t per_topic,
                                          std::uint64_t seed);

// Condition tokens found in a serialized rater payload: a "condition" key
// anywhere, or a whole-word "rag" / "no_rag" (any case) in any key or string value.
std::vector<std::string> blinding_violations(const json& payload);
std::vector<std::string> blinding_violations(std::string_view serialized);

struct Rating {
    std::string session_id;
    std::string annotator_id;
    std::string item_id;
    Axis axis = Axis::Accuracy;
    int score = 0;
    std::string recorded_at;

    json to_json() const;
    static Rating from_json(const json& j);
};

struct RecordAck {
    bool superseded = false;
    std::size_t remaining = 0;  // items still missing at least one axis
};

// Session plans and their ratings under one directory:
//   <root>/sessions/<session_id>.json   server copy of the plan
//   <root>/ratings/<session_id>.jsonl   append-only rating log
// The newest line for an (annotator, item, axis) wins; earlier ones stay in
// the log with the replacement marked "supersedes".
class AnnotationStore {
public:
    // Directories are created on first write, so read-only use leaves no trace.
    explicit AnnotationStore(std::filesystem::path root, Clock clock = system_clock());
    ~AnnotationStore();

    const std::filesystem::path& root() const { return root_; }

    // Throws ValidationError("session_exists") unless the stored plan is identical.
    void save_plan(const SessionPlan& plan);
    // Throws NotFoundError("unknown_session").
    SessionPlan plan(const std::string& session_id) const;
    std::vector<SessionPlan> plans() const;

    // Throws ValidationError("score_out_of_range"), NotFoundError("unknown_session"
    // / "unknown_item"), ForbiddenError("foreign_session").
    RecordAck record(const std::string& annotator_id, const std::string& session_id, const std::string& item_id,
                     Axis axis, int score);

    // Lowest display_order item not yet rated on every axis, or nullopt when done.
    std::optional<AnnotationItem> next_item(const std::string& annotator_id, const std::string& session_id);
    std::size_t remaining(const std::string& session_id);

    // Effective ratings (superseded lines dropped) of one session or all.
    std::vector<Rating> ratings(const std::string& session_id);
    std::vector<Rating> all_ratings();

private:
    struct Session;
    Session& open(const std::string& session_id);
    const SessionPlan& check_owner(Session& s, const std::string& annotator_id) const;

    std::filesystem::path root_;
    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
};

// Reads a rating log. A torn final line (no trailing newline, not valid JSON)
// is ignored; any other malformed line throws.
std::vector<Rating> load_rating_log(const std::filesystem::path& path);
// Keeps the newest rating per (annotator, item, axis), in first-seen order.
std::vector<Rating> effective_ratings(const std::vector<Rating>& log);

struct ComparisonResult {
    Axis axis = Axis::Accuracy;
    double mean_no_rag = 0.0;  // over per-question means
    double mean_rag = 0.0;
    double mean_diff = 0.0;    // rag - no_rag
    double p_value = 1.0;
    std::string test_name;
    std::size_t n_pairs = 0;
    bool degenerate = false;

    json to_json() const;
};

struct RatingCell {
    std::optional<double> mean;  // absent when nothing was rated
    std::size_t n = 0;
};

struct RatingRow {
    std::string label;  // "overall" or a topic name
    std::size_t questions = 0;
    std::map<Axis, std::map<Mode, RatingCell>> cells;
    std::map<Axis, std::optional<ComparisonResult>> comparisons;  // absent below two pairs
};

struct RatingsReport {
    std::string test_name;
    std::size_t ratings = 0;
    std::size_t annotators = 0;
    std::vector<RatingRow> rows;  // overall first, then topics alphabetically

    json to_json() const;
    std::string to_text() const;
};

// Ratings whose item is in none of the plans throw NotFoundError("unknown_item").
RatingsReport aggregate_ratings(const std::vector<Rating>& ratings, const std::vector<SessionPlan>& plans,
                                stats::PairedMethod method = stats::PairedMethod::TTest,
                                const stats::PairedOptions& options = {});

// Pairing unit is the question: each condition contributes the mean over
// annotators of that question's ratings. Throws ValidationError("insufficient_pairs")
// below two complete pairs. `topic` restricts the questions considered.
ComparisonResult compare_conditions(const std::vector<Rating>& ratings, const std::vector<SessionPlan>& plans,
                                    Axis axis, stats::PairedMethod method = stats::PairedMethod::TTest,
                                    const stats::PairedOptions& options = {},
                                    std::optional<Topic> topic = std::nullopt);

// annotator_id,item_id,axis,score,timestamp
std::string ratings_to_csv(const std::vector<Rating>& ratings);

}  // namespace evr
