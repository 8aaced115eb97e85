#include "evr/annotation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "evr/error.hpp"
#include "evr/text.hpp"

namespace evr {

std::string_view to_string(Axis a) {
    switch (a) {
        case Axis::Accuracy: return "accuracy";
        case Axis::Completeness: return "completeness";
        case Axis::Attribution: return "attribution";
    }
    return "unknown";
}

Axis parse_axis(std::string_view s) {
    for (const auto a : kAllAxes) {
        if (to_string(a) == s) return a;
    }
    throw ValidationError("invalid_axis", "unknown axis '" + std::string(s) + "'");
}

std::string axis_label(Axis a) {
    switch (a) {
        case Axis::Accuracy: return "Accuracy";
        case Axis::Completeness: return "Completeness";
        case Axis::Attribution: return "Evidence attribution";
    }
    return "unknown";
}

json AnnotationItem::to_server_json() const {
    return json{{"item_id", item_id},
                {"question_id", question_id},
                {"topic", to_string(topic)},
                {"condition", to_string(condition)},
                {"display_order", display_order},
                {"question", question},
                {"presented_text", presented_text}};
}

AnnotationItem AnnotationItem::from_server_json(const json& j) {
    AnnotationItem it;
    it.item_id = j.at("item_id").get<std::string>();
    it.question_id = j.at("question_id").get<std::string>();
    it.topic = parse_topic(j.at("topic").get<std::string>());
    it.condition = parse_mode(j.at("condition").get<std::string>());
    it.display_order = j.at("display_order").get<std::size_t>();
    it.question = j.value("question", "");
    it.presented_text = j.at("presented_text").get<std::string>();
    return it;
}

json AnnotationItem::to_rater_json(std::size_t total) const {
    return json{{"item_id", item_id},
                {"position", display_order},
                {"total", total},
                {"question", question},
                {"presented_text", presented_text}};
}

const AnnotationItem* SessionPlan::find(std::string_view item_id) const {
    for (const auto& it : items) {
        if (it.item_id == item_id) return &it;
    }
    return nullptr;
}

json SessionPlan::to_server_json() const {
    json items_j = json::array();
    for (const auto& it : items) items_j.push_back(it.to_server_json());
    return json{{"session_id", session_id},
                {"annotator_id", annotator_id},
                {"seed", seed},
                {"run_id", run_id},
                {"items", items_j}};
}

SessionPlan SessionPlan::from_server_json(const json& j) {
    SessionPlan p;
    try {
        p.session_id = j.at("session_id").get<std::string>();
        p.annotator_id = j.at("annotator_id").get<std::string>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.run_id = j.value("run_id", "");
        for (const auto& it : j.at("items")) p.items.push_back(AnnotationItem::from_server_json(it));
    } catch (const json::exception& e) {
        throw ValidationError("malformed_plan", std::string("session plan: ") + e.what());
    }
    std::sort(p.items.begin(), p.items.end(),
              [](const auto& a, const auto& b) { return a.display_order < b.display_order; });
    return p;
}

json SessionPlan::to_rater_json() const {
    json items_j = json::array();
    for (const auto& it : items) items_j.push_back(it.to_rater_json(items.size()));
    return json{{"session_id", session_id}, {"annotator_id", annotator_id}, {"total", items.size()}, {"items", items_j}};
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw ValidationError("invalid_bound", "bounded draw needs a positive bound");
    // Largest multiple of bound that fits, computed without overflow.
    const std::uint64_t reject_from = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x > reject_from);
    return x % bound;
}

namespace {

std::string item_id_for(const std::string& session_id, const std::string& question_id, Mode m) {
    std::string key = session_id;
    key += '\x1f';
    key += question_id;
    key += '\x1f';
    key += to_string(m);
    return hex64(stable_hash(key, 0x6974656d));
}

bool safe_session_id(std::string_view id) {
    if (id.empty() || id.size() > 128 || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
               c == '.';
    });
}

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

void scan_words(std::string_view s, std::vector<std::string>& out, std::string_view where) {
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_char(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word_char(s[j])) ++j;
        std::string w(s.substr(i, j - i));
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
        if (w == "rag" || w == "no_rag") out.push_back(std::string(where) + ":" + w);
        i = j;
    }
}

void scan_json(const json& j, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (k == "condition") out.push_back("key:condition");
            scan_words(k, out, "key");
            scan_json(v, out);
        }
    } else if (j.is_array()) {
        for (const auto& v : j) scan_json(v, out);
    } else if (j.is_string()) {
        scan_words(j.get_ref<const std::string&>(), out, "value");
    }
}

}  // namespace

SessionPlan build_blinded_session(const std::vector<std::string>& question_ids, const RunArchive& archive,
                                  const std::string& annotator_id, std::uint64_t seed, std::string session_id) {
    if (question_ids.empty()) throw ValidationError("empty_input", "no questions for the session");
    if (text::trim(annotator_id).empty()) throw ValidationError("missing_annotator", "annotator id is empty");
    const std::string run_id = archive.manifest.is_object() ? archive.manifest.value("run_id", "") : "";
    if (session_id.empty()) {
        session_id = "s-" + hex64(stable_hash(run_id + '\x1f' + annotator_id + '\x1f' + std::to_string(seed)));
    }
    if (!safe_session_id(session_id)) throw ValidationError("invalid_session_id", "bad session id '" + session_id + "'");

    std::map<std::pair<std::string, Mode>, const GenerationResult*> by_key;
    for (const auto& r : archive.results) by_key.emplace(std::pair{r.question_id, r.mode}, &r);

    std::set<std::string> seen;
    std::vector<std::string> gaps;
    std::vector<AnnotationItem> items;
    for (const auto& qid : question_ids) {
        if (!seen.insert(qid).second) throw ValidationError("duplicate_question_id", "question " + qid + " listed twice");
        std::vector<std::string> missing;
        for (const auto m : kAllModes) {
            const auto it = by_key.find({qid, m});
            if (it == by_key.end()) {
                missing.emplace_back(to_string(m));
                continue;
            }
            AnnotationItem item;
            item.item_id = item_id_for(session_id, qid, m);
            item.question_id = qid;
            item.topic = it->second->topic;
            item.condition = m;
            item.question = it->second->question;
            item.presented_text = it->second->answer_text;
            items.push_back(std::move(item));
        }
        if (!missing.empty()) gaps.push_back(qid + " missing " + text::join(missing, ", "));
    }
    if (!gaps.empty()) {
        throw ValidationError("incomplete_pairs", "run archive lacks conditions: " + text::join(gaps, "; "));
    }

    seeded_shuffle(items, seed);
    for (std::size_t i = 0; i < items.size(); ++i) items[i].display_order = i + 1;

    SessionPlan plan;
    plan.session_id = std::move(session_id);
    plan.annotator_id = annotator_id;
    plan.seed = seed;
    plan.run_id = run_id;
    plan.items = std::move(items);
    return plan;
}

std::vector<std::string> sample_questions(const std::vector<QuestionRecord>& questions, std::size_t per_topic,
                                          std::uint64_t seed) {
    std::vector<std::size_t> idx(questions.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    seeded_shuffle(idx, seed);
    std::map<Topic, std::size_t> taken;
    std::vector<std::size_t> keep;
    for (const auto i : idx) {
        if (taken[questions[i].topic]++ < per_topic) keep.push_back(i);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<std::string> out;
    for (const auto i : keep) out.push_back(questions[i].question_id);
    return out;
}

std::vector<std::string> blinding_violations(const json& payload) {
    std::vector<std::string> out;
    scan_json(payload, out);
    return out;
}

std::vector<std::string> blinding_violations(std::string_view serialized) {
    std::vector<std::string> out;
    if (serialized.find("\"condition\"") != std::string_view::npos) out.push_back("key:condition");
    scan_words(serialized, out, "bytes");
    return out;
}

json Rating::to_json() const {
    return json{{"session_id", session_id}, {"annotator_id", annotator_id}, {"item_id", item_id},
                {"axis", to_string(axis)},  {"score", score},               {"recorded_at", recorded_at}};
}

Rating Rating::from_json(const json& j) {
    Rating r;
    try {
        r.session_id = j.value("session_id", "");
        r.annotator_id = j.at("annotator_id").get<std::string>();
        r.item_id = j.at("item_id").get<std::string>();
        r.axis = parse_axis(j.at("axis").get<std::string>());
        r.score = j.at("score").get<int>();
        r.recorded_at = j.value("recorded_at", "");
    } catch (const json::exception& e) {
        throw ValidationError("malformed_rating", std::string("rating: ") + e.what());
    }
    if (r.score < kScoreMin || r.score > kScoreMax) {
        throw ValidationError("score_out_of_range", "score " + std::to_string(r.score) + " outside 1..5");
    }
    return r;
}

std::vector<Rating> load_rating_log(const std::filesystem::path& path) {
    std::vector<Rating> out;
    if (!std::filesystem::exists(path)) return out;
    const auto content = read_file(path);
    std::size_t start = 0, line_no = 0;
    while (start < content.size()) {
        const auto nl = content.find('\n', start);
        ++line_no;
        const bool complete = nl != std::string::npos;
        const auto line = std::string_view(content).substr(start, complete ? nl - start : std::string::npos);
        start = complete ? nl + 1 : content.size();
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (!complete) break;  // torn tail of an interrupted append
            throw ValidationError("malformed_json", path.string() + ":" + std::to_string(line_no) + ": not JSON");
        }
        out.push_back(Rating::from_json(j));
    }
    return out;
}

std::vector<Rating> effective_ratings(const std::vector<Rating>& log) {
    std::map<std::tuple<std::string, std::string, Axis>, std::size_t> slot;
    std::vector<Rating> out;
    for (const auto& r : log) {
        const auto key = std::tuple{r.annotator_id, r.item_id, r.axis};
        const auto it = slot.find(key);
        if (it == slot.end()) {
            slot.emplace(key, out.size());
            out.push_back(r);
        } else {
            out[it->second] = r;
        }
    }
    return out;
}

struct AnnotationStore::Session {
    std::mutex mu;
    SessionPlan plan;
    std::filesystem::path log_path;
    std::vector<Rating> effective;
    std::map<std::pair<std::string, Axis>, std::size_t> slot;  // (item, axis) -> index in effective

    bool fully_rated(const std::string& item_id) const {
        return std::all_of(kAllAxes.begin(), kAllAxes.end(),
                           [&](Axis a) { return slot.contains({item_id, a}); });
    }
    std::size_t remaining() const {
        return static_cast<std::size_t>(std::count_if(plan.items.begin(), plan.items.end(),
                                                      [&](const auto& it) { return !fully_rated(it.item_id); }));
    }
};

AnnotationStore::AnnotationStore(std::filesystem::path root, Clock clock)
    : root_(std::move(root)), clock_(std::move(clock)) {}

AnnotationStore::~AnnotationStore() = default;

void AnnotationStore::save_plan(const SessionPlan& plan) {
    if (!safe_session_id(plan.session_id)) {
        throw ValidationError("invalid_session_id", "bad session id '" + plan.session_id + "'");
    }
    const auto path = root_ / "sessions" / (plan.session_id + ".json");
    const auto content = plan.to_server_json().dump(2) + "\n";
    std::lock_guard lock(mu_);
    std::filesystem::create_directories(path.parent_path());
    if (std::filesystem::exists(path)) {
        if (read_file(path) == content) return;
        throw ValidationError("session_exists", "session " + plan.session_id + " already exists with another plan");
    }
    write_file_atomic(path, content);
}

SessionPlan AnnotationStore::plan(const std::string& session_id) const {
    const auto path = root_ / "sessions" / (session_id + ".json");
    if (!safe_session_id(session_id) || !std::filesystem::exists(path)) {
        throw NotFoundError("unknown_session", "no session '" + session_id + "'");
    }
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ValidationError("malformed_plan", path.string() + " is not JSON");
    return SessionPlan::from_server_json(j);
}

std::vector<SessionPlan> AnnotationStore::plans() const {
    std::vector<std::string> ids;
    if (!std::filesystem::is_directory(root_ / "sessions")) return {};
    for (const auto& e : std::filesystem::directory_iterator(root_ / "sessions")) {
        if (e.path().extension() == ".json") ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    std::vector<SessionPlan> out;
    for (const auto& id : ids) out.push_back(plan(id));
    return out;
}

AnnotationStore::Session& AnnotationStore::open(const std::string& session_id) {
    std::lock_guard lock(mu_);
    if (const auto it = sessions_.find(session_id); it != sessions_.end()) return *it->second;
    auto s = std::make_unique<Session>();
    s->plan = plan(session_id);
    s->log_path = root_ / "ratings" / (session_id + ".jsonl");
    if (std::filesystem::exists(s->log_path)) {
        // Cut a torn tail so the next append starts on a fresh line.
        const auto content = read_file(s->log_path);
        if (!content.empty() && content.back() != '\n') {
            const auto nl = content.rfind('\n');
            std::filesystem::resize_file(s->log_path, nl == std::string::npos ? 0 : nl + 1);
        }
    }
    s->effective = effective_ratings(load_rating_log(s->log_path));
    for (std::size_t i = 0; i < s->effective.size(); ++i) {
        s->slot[{s->effective[i].item_id, s->effective[i].axis}] = i;
    }
    auto& ref = *s;
    sessions_.emplace(session_id, std::move(s));
    return ref;
}

const SessionPlan& AnnotationStore::check_owner(Session& s, const std::string& annotator_id) const {
    if (s.plan.annotator_id != annotator_id) {
        throw ForbiddenError("foreign_session", "session " + s.plan.session_id + " belongs to another annotator");
    }
    return s.plan;
}

RecordAck AnnotationStore::record(const std::string& annotator_id, const std::string& session_id,
                                  const std::string& item_id, Axis axis, int score) {
    if (score < kScoreMin || score > kScoreMax) {
        throw ValidationError("score_out_of_range", "score " + std::to_string(score) + " outside 1..5");
    }
    auto& s = open(session_id);
    check_owner(s, annotator_id);
    if (!s.plan.find(item_id)) throw NotFoundError("unknown_item", "no item '" + item_id + "' in " + session_id);

    Rating r;
    r.session_id = session_id;
    r.annotator_id = annotator_id;
    r.item_id = item_id;
    r.axis = axis;
    r.score = score;
    r.recorded_at = format_utc(clock_());

    std::lock_guard lock(s.mu);
    std::filesystem::create_directories(s.log_path.parent_path());
    RecordAck ack;
    auto line = r.to_json();
    const auto it = s.slot.find({item_id, axis});
    if (it != s.slot.end()) {
        ack.superseded = true;
        line["supersedes"] = s.effective[it->second].to_json();
    }
    append_line_durable(s.log_path, line.dump());
    if (it != s.slot.end()) {
        s.effective[it->second] = r;
    } else {
        s.slot[{item_id, axis}] = s.effective.size();
        s.effective.push_back(r);
    }
    ack.remaining = s.remaining();
    return ack;
}

std::optional<AnnotationItem> AnnotationStore::next_item(const std::string& annotator_id,
                                                         const std::string& session_id) {
    auto& s = open(session_id);
    check_owner(s, annotator_id);
    std::lock_guard lock(s.mu);
    for (const auto& it : s.plan.items) {
        if (!s.fully_rated(it.item_id)) return it;
    }
    return std::nullopt;
}

std::size_t AnnotationStore::remaining(const std::string& session_id) {
    auto& s = open(session_id);
    std::lock_guard lock(s.mu);
    return s.remaining();
}

std::vector<Rating> AnnotationStore::ratings(const std::string& session_id) {
    auto& s = open(session_id);
    std::lock_guard lock(s.mu);
    return s.effective;
}

std::vector<Rating> AnnotationStore::all_ratings() {
    std::vector<Rating> out;
    for (const auto& p : plans()) {
        auto part = ratings(p.session_id);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

json ComparisonResult::to_json() const {
    return json{{"axis", to_string(axis)},   {"mean_no_rag", mean_no_rag}, {"mean_rag", mean_rag},
                {"mean_diff", mean_diff},    {"p_value", p_value},         {"test_name", test_name},
                {"n_pairs", n_pairs},        {"degenerate", degenerate}};
}

namespace {

struct ItemInfo {
    std::string question_id;
    Topic topic;
    Mode condition;
};

std::map<std::string, ItemInfo> index_items(const std::vector<SessionPlan>& plans) {
    std::map<std::string, ItemInfo> out;
    for (const auto& p : plans) {
        for (const auto& it : p.items) out.emplace(it.item_id, ItemInfo{it.question_id, it.topic, it.condition});
    }
    return out;
}

const ItemInfo& lookup(const std::map<std::string, ItemInfo>& items, const Rating& r) {
    const auto it = items.find(r.item_id);
    if (it == items.end()) throw NotFoundError("unknown_item", "rating for unknown item '" + r.item_id + "'");
    return it->second;
}

ComparisonResult compare_indexed(const std::vector<Rating>& ratings, const std::map<std::string, ItemInfo>& items,
                                 Axis axis, stats::PairedMethod method, const stats::PairedOptions& options,
                                 std::optional<Topic> topic) {
    // question -> condition -> (sum, count)
    std::map<std::string, std::map<Mode, std::pair<double, std::size_t>>> acc;
    for (const auto& r : ratings) {
        if (r.axis != axis) continue;
        const auto& info = lookup(items, r);
        if (topic && info.topic != *topic) continue;
        auto& cell = acc[info.question_id][info.condition];
        cell.first += r.score;
        ++cell.second;
    }
    std::vector<double> a, b;
    for (const auto& [qid, by_mode] : acc) {
        const auto nr = by_mode.find(Mode::NoRag);
        const auto rg = by_mode.find(Mode::Rag);
        if (nr == by_mode.end() || rg == by_mode.end()) continue;
        a.push_back(nr->second.first / static_cast<double>(nr->second.second));
        b.push_back(rg->second.first / static_cast<double>(rg->second.second));
    }
    const auto t = stats::paired_test(a, b, method, options);
    ComparisonResult c;
    c.axis = axis;
    c.mean_no_rag = t.mean_a;
    c.mean_rag = t.mean_b;
    c.mean_diff = t.mean_diff;
    c.p_value = t.p_value;
    c.test_name = t.test_name + " on per-question means";
    c.n_pairs = t.n_pairs;
    c.degenerate = t.degenerate;
    return c;
}

std::string topic_heading(std::string_view label) {
    if (label == "overall") return "Overall questions";
    std::string s(label);
    std::replace(s.begin(), s.end(), '_', ' ');
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s + " questions";
}

}  // namespace

ComparisonResult compare_conditions(const std::vector<Rating>& ratings, const std::vector<SessionPlan>& plans,
                                    Axis axis, stats::PairedMethod method, const stats::PairedOptions& options,
                                    std::optional<Topic> topic) {
    return compare_indexed(ratings, index_items(plans), axis, method, options, topic);
}

RatingsReport aggregate_ratings(const std::vector<Rating>& ratings, const std::vector<SessionPlan>& plans,
                                stats::PairedMethod method, const stats::PairedOptions& options) {
    if (ratings.empty()) throw ValidationError("empty_input", "no ratings to aggregate");
    const auto items = index_items(plans);

    std::map<std::string, Topic> topics_by_name;
    std::map<std::string, std::set<std::string>> questions_by_row;
    for (const auto& [id, info] : items) {
        topics_by_name.emplace(std::string(to_string(info.topic)), info.topic);
        questions_by_row["overall"].insert(info.question_id);
        questions_by_row[std::string(to_string(info.topic))].insert(info.question_id);
    }

    RatingsReport rep;
    rep.test_name = stats::test_name(method) + " on per-question means";
    rep.ratings = ratings.size();
    std::set<std::string> annotators;
    std::map<std::string, std::map<Axis, std::map<Mode, std::pair<double, std::size_t>>>> sums;
    for (const auto& r : ratings) {
        const auto& info = lookup(items, r);
        annotators.insert(r.annotator_id);
        for (const auto& row : {std::string("overall"), std::string(to_string(info.topic))}) {
            auto& cell = sums[row][r.axis][info.condition];
            cell.first += r.score;
            ++cell.second;
        }
    }
    rep.annotators = annotators.size();

    std::vector<std::pair<std::string, std::optional<Topic>>> row_defs{{"overall", std::nullopt}};
    for (const auto& [name, t] : topics_by_name) row_defs.emplace_back(name, t);

    for (const auto& [label, topic] : row_defs) {
        RatingRow row;
        row.label = label;
        row.questions = questions_by_row[label].size();
        for (const auto axis : kAllAxes) {
            for (const auto m : kAllModes) {
                RatingCell cell;
                const auto& s = sums[label][axis][m];
                cell.n = s.second;
                if (s.second > 0) cell.mean = s.first / static_cast<double>(s.second);
                row.cells[axis][m] = cell;
            }
            try {
                row.comparisons[axis] = compare_indexed(ratings, items, axis, method, options, topic);
            } catch (const ValidationError& e) {
                if (e.code() != "insufficient_pairs") throw;
                row.comparisons[axis] = std::nullopt;
            }
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

json RatingsReport::to_json() const {
    json rows_j = json::array();
    for (const auto& row : rows) {
        json axes = json::object();
        for (const auto axis : kAllAxes) {
            json a = json::object();
            for (const auto m : kAllModes) {
                const auto& cell = row.cells.at(axis).at(m);
                a[std::string(to_string(m))] = json{{"mean", cell.mean ? json(*cell.mean) : json(nullptr)}, {"n", cell.n}};
            }
            const auto& c = row.comparisons.at(axis);
            a["comparison"] = c ? c->to_json() : json(nullptr);
            axes[std::string(to_string(axis))] = a;
        }
        rows_j.push_back(json{{"label", row.label}, {"questions", row.questions}, {"axes", axes}});
    }
    return json{{"kind", "ratings"},
                {"test_name", test_name},
                {"ratings", ratings},
                {"annotators", annotators},
                {"rows", rows_j}};
}

std::string RatingsReport::to_text() const {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu ratings from %zu annotator(s); %s\n\n", ratings, annotators, test_name.c_str());
    os << buf;
    std::snprintf(buf, sizeof buf, "%-26s %12s %12s %9s\n", "", "Without RAG", "With RAG", "P-value");
    os << buf;
    auto num = [](const std::optional<double>& v, const char* f) {
        if (!v) return std::string("-");
        char b[32];
        std::snprintf(b, sizeof b, f, *v);
        return std::string(b);
    };
    for (const auto& row : rows) {
        os << topic_heading(row.label) << " (n=" << row.questions << ")\n";
        for (const auto axis : kAllAxes) {
            const auto& c = row.comparisons.at(axis);
            const auto p = c ? std::optional<double>(c->p_value) : std::nullopt;
            std::snprintf(buf, sizeof buf, "  %-24s %12s %12s %9s%s\n", axis_label(axis).c_str(),
                          num(row.cells.at(axis).at(Mode::NoRag).mean, "%.2f").c_str(),
                          num(row.cells.at(axis).at(Mode::Rag).mean, "%.2f").c_str(), num(p, "%.3f").c_str(),
                          c && c->degenerate ? " *" : "");
            os << buf;
        }
    }
    bool any_degenerate = false;
    for (const auto& row : rows) {
        for (const auto& [axis, c] : row.comparisons) any_degenerate = any_degenerate || (c && c->degenerate);
    }
    if (any_degenerate) os << "\n* zero variance in paired differences; p-value set by convention\n";
    return os.str();
}

std::string ratings_to_csv(const std::vector<Rating>& ratings) {
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (const char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    std::string out = "annotator_id,item_id,axis,score,timestamp\n";
    for (const auto& r : ratings) {
        out += field(r.annotator_id) + "," + field(r.item_id) + "," + std::string(to_string(r.axis)) + "," +
               std::to_string(r.score) + "," + field(r.recorded_at) + "\n";
    }
    return out;
}

}  // namespace evr
