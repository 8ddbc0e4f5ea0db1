#include "tactix/activity.hpp"

#include "tactix/digest.hpp"
#include "tactix/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace tactix {

using nlohmann::json;

Activity load_activity(std::string_view document)
{
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("activity: malformed JSON: ") + e.what());
    }
    try {
        Activity a;
        a.title = j.value("title", std::string{});
        for (const auto& t : j.at("tasks"))
            a.tasks.push_back({t.at("id").get<std::string>(), t.at("text").get<std::string>(), t.value("zone_hint", std::string{})});
        for (const auto& q : j.at("questions"))
            a.questions.push_back({q.at("id").get<std::string>(), q.at("text").get<std::string>(),
                                   q.at("answer_zone_id").get<std::string>()});
        return a;
    } catch (const json::exception& e) {
        throw ParseError(std::string("activity: ") + e.what());
    }
}

Activity load_activity_file(const std::string& path)
{
    return load_activity(read_file(path));
}

std::vector<std::string> validate_activity(const Activity& activity, const ZoneMap& map)
{
    std::vector<std::string> problems;
    if (activity.questions.empty()) problems.push_back("activity has no questions");
    std::set<std::string> ids;
    for (const auto& t : activity.tasks) {
        if (!ids.insert(t.id).second) problems.push_back("duplicate task id '" + t.id + "'");
        if (!t.zone_hint.empty() && !map.has_zone(t.zone_hint))
            problems.push_back("task " + t.id + ": unknown zone_hint '" + t.zone_hint + "'");
    }
    ids.clear();
    for (const auto& q : activity.questions) {
        if (!ids.insert(q.q_id).second) problems.push_back("duplicate question id '" + q.q_id + "'");
        if (!map.has_zone(q.answer_zone_id))
            problems.push_back("question " + q.q_id + ": unknown answer_zone_id '" + q.answer_zone_id + "'");
    }
    return problems;
}

std::string_view to_string(RejectReason reason)
{
    switch (reason) {
    case RejectReason::not_colocated: return "not_colocated";
    case RejectReason::awaiting_partner: return "awaiting_partner";
    case RejectReason::already_answered: return "already_answered";
    }
    return "unknown";
}

ActivityState::ActivityState(const Activity& activity, const ZoneMap& map) : map_(&map), questions_(activity.questions)
{
    if (const auto problems = validate_activity(activity, map); !problems.empty()) throw ValidationError(problems.front());
    for (const auto& t : activity.tasks) tasks_.push_back({t.id, t.text, std::nullopt});
    states_.resize(questions_.size());
}

std::size_t ActivityState::index_of(std::string_view q_id) const
{
    for (std::size_t i = 0; i < questions_.size(); ++i)
        if (questions_[i].q_id == q_id) return i;
    throw DomainError("unknown question '" + std::string(q_id) + "'");
}

void ActivityState::require_open(std::size_t index) const
{
    if (states_[index].result) throw DomainError("question already answered");
    if (!current_ || *current_ != index) throw DomainError("question '" + questions_[index].q_id + "' is not current");
}

void ActivityState::tick_task(std::string_view task_id, Party who, std::int64_t t_ms)
{
    for (auto& t : tasks_) {
        if (t.task_id != task_id) continue;
        if (!t.done_by) t.done_by = Stamp{who, t_ms};
        return;
    }
    throw DomainError("unknown task '" + std::string(task_id) + "'");
}

void ActivityState::navigate(std::string_view q_id, std::int64_t t_ms)
{
    const std::size_t i = index_of(q_id);
    if (states_[i].result) throw DomainError("question already answered");
    if (!started_) started_ = t_ms;
    current_ = i;
}

void ActivityState::propose_answer(std::string_view q_id, Party who, std::string_view zone_id)
{
    const std::size_t i = index_of(q_id);
    require_open(i);
    if (!map_->has_zone(zone_id)) throw DomainError("unknown zone '" + std::string(zone_id) + "'");
    states_[i].proposals[who] = std::string(zone_id);
}

void ActivityState::cast_vote(std::string_view q_id, Party who, std::string_view zone_id)
{
    propose_answer(q_id, who, zone_id);
    states_[index_of(q_id)].votes[who] = std::string(zone_id);
}

SubmitOutcome ActivityState::try_submit(std::string_view q_id, const std::optional<std::string>& live_zone_a,
                                        const std::optional<std::string>& live_zone_b,
                                        const std::map<Party, std::string>& votes, std::int64_t t_ms)
{
    const std::size_t i = index_of(q_id);
    QuestionState& qs = states_[i];
    if (qs.result) return {false, RejectReason::already_answered, std::nullopt};
    if (!current_ || *current_ != i) throw DomainError("question '" + std::string(q_id) + "' is not current");
    if (!live_zone_a || !live_zone_b || *live_zone_a != *live_zone_b)
        return {false, RejectReason::not_colocated, std::nullopt};

    const std::string& zone = *live_zone_a;
    const auto vote_a = votes.find(Party::A);
    const auto vote_b = votes.find(Party::B);
    if (vote_a == votes.end() || vote_b == votes.end() || vote_a->second != zone || vote_b->second != zone)
        return {false, RejectReason::awaiting_partner, std::nullopt};

    // agreement requires equal proposals as well; votes overwrite proposals
    qs.proposals[Party::A] = zone;
    qs.proposals[Party::B] = zone;
    qs.agreement = zone;
    const bool correct = zone == questions_[i].answer_zone_id;
    qs.result = QuestionResult{correct, t_ms};

    current_.reset();
    for (std::size_t k = 1; k <= questions_.size(); ++k) {
        const std::size_t next = (i + k) % questions_.size();
        if (!states_[next].result) {
            current_ = next;
            break;
        }
    }
    if (!current_) finished_ = t_ms;
    return {true, std::nullopt, correct};
}

SubmitOutcome ActivityState::try_submit(std::string_view q_id, const std::optional<std::string>& live_zone_a,
                                        const std::optional<std::string>& live_zone_b, std::int64_t t_ms)
{
    const auto votes = states_[index_of(q_id)].votes;
    return try_submit(q_id, live_zone_a, live_zone_b, votes, t_ms);
}

std::optional<std::string> ActivityState::current_question() const
{
    if (!current_) return std::nullopt;
    return questions_[*current_].q_id;
}

int ActivityState::answered_count() const
{
    int n = 0;
    for (const auto& s : states_) n += s.result ? 1 : 0;
    return n;
}

QuizReport ActivityState::quiz_report() const
{
    if (!finished_ || !started_) throw DomainError("quiz not finished");
    QuizReport r;
    r.total = static_cast<int>(questions_.size());
    for (const auto& s : states_) r.score += (s.result && s.result->correct) ? 1 : 0;
    r.duration_s = static_cast<double>(*finished_ - *started_) / 1000.0;
    return r;
}

json ActivityState::to_json() const
{
    auto party_map = [](const std::map<Party, std::string>& m) {
        json out = json::object();
        for (const auto& [who, zone] : m) out[std::string(tactix::to_string(who))] = zone;
        return out;
    };
    json tasks = json::array();
    for (const auto& t : tasks_) {
        json tj = {{"task_id", t.task_id}, {"done_by", nullptr}};
        if (t.done_by) tj["done_by"] = {{"participant", std::string(tactix::to_string(t.done_by->who))}, {"t_ms", t.done_by->t_ms}};
        tasks.push_back(std::move(tj));
    }
    json questions = json::array();
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        const auto& s = states_[i];
        json qj = {{"q_id", questions_[i].q_id},
                   {"proposals", party_map(s.proposals)},
                   {"votes", party_map(s.votes)},
                   {"agreement", s.agreement ? json(*s.agreement) : json(nullptr)},
                   {"result", nullptr}};
        if (s.result) qj["result"] = {{"correct", s.result->correct}, {"t_ms", s.result->t_ms}};
        questions.push_back(std::move(qj));
    }
    return {{"tasks", std::move(tasks)},
            {"questions", std::move(questions)},
            {"current", current_ ? json(questions_[*current_].q_id) : json(nullptr)},
            {"quiz_started_t_ms", started_ ? json(*started_) : json(nullptr)},
            {"quiz_finished_t_ms", finished_ ? json(*finished_) : json(nullptr)}};
}

ActivityEngine::ActivityEngine(const Activity& activity, const ZoneMap& map) : map_(&map), state_(activity, map) {}

std::vector<Outbound> ActivityEngine::handle(const Envelope& e)
{
    std::vector<Outbound> out;
    if (e.from == Party::server) return out;
    const auto& p = e.payload;
    switch (e.type) {
    case MessageType::zone: {
        const auto zone = p.at("zone_id").get<std::string>();
        if (!map_->has_zone(zone)) throw DomainError("unknown zone '" + zone + "'");
        (e.from == Party::A ? live_a_ : live_b_) = zone;
        break;
    }
    case MessageType::task_tick:
        if (p.at("done").get<bool>()) state_.tick_task(p.at("task_id").get<std::string>(), e.from, e.t_ms);
        break;
    case MessageType::quiz_nav: {
        const auto q = p.at("q_id").get<std::string>();
        state_.navigate(q, e.t_ms);
        Envelope nav = msg::quiz_nav(q);
        out.push_back({Recipient::both, nav});
        break;
    }
    case MessageType::propose:
        state_.propose_answer(p.at("q_id").get<std::string>(), e.from, p.at("zone_id").get<std::string>());
        break;
    case MessageType::agree: {
        const auto q = p.at("q_id").get<std::string>();
        const auto z = p.at("zone_id").get<std::string>();
        const bool answered = state_.question_state(q).result.has_value();
        if (!answered) state_.cast_vote(q, e.from, z);
        const SubmitOutcome r = state_.try_submit(q, live_a_, live_b_, e.t_ms);
        Envelope res;
        res.type = MessageType::submit_result;
        res.payload = {{"q_id", q},
                       {"accepted", r.accepted},
                       {"correct", r.correct ? json(*r.correct) : json(nullptr)},
                       {"reason", r.accepted ? std::string("ok") : std::string(to_string(*r.reason))},
                       {"answered", state_.answered_count()},
                       {"total", static_cast<int>(state_.questions().size())}};
        if (r.accepted) {
            res.payload["zone_id"] = z;
            out.push_back({Recipient::both, res});
            if (const auto next = state_.current_question()) out.push_back({Recipient::both, msg::quiz_nav(*next)});
        } else {
            out.push_back({e.from == Party::A ? Recipient::A : Recipient::B, res});
        }
        break;
    }
    default:
        break;
    }
    return out;
}

ActivityState replay_activity(std::span<const Envelope> events, const Activity& activity, const ZoneMap& map)
{
    ActivityEngine engine(activity, map);
    for (const Envelope& e : events) {
        if (e.from == Party::server) continue;
        engine.handle(e);
    }
    return engine.state();
}

} // namespace tactix
