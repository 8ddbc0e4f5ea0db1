#pragma once

#include "tactix/protocol.hpp"
#include "tactix/zone_map.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tactix {

struct TaskDef {
    std::string id;
    std::string text;
    std::string zone_hint; // optional; where a scripted agent ticks it
};

struct QuizQuestion {
    std::string q_id;
    std::string text;
    std::string answer_zone_id;

    bool operator==(const QuizQuestion&) const = default;
};

/// Authored activity content: exploratory tasks and the quiz with its key.
struct Activity {
    std::string title;
    std::vector<TaskDef> tasks;
    std::vector<QuizQuestion> questions;
};

Activity load_activity(std::string_view document);
Activity load_activity_file(const std::string& path);

/// Cross-reference problems between an activity and a map; empty when valid.
std::vector<std::string> validate_activity(const Activity& activity, const ZoneMap& map);

struct Stamp {
    Party who = Party::A;
    std::int64_t t_ms = 0;

    bool operator==(const Stamp&) const = default;
};

struct TaskItem {
    std::string task_id;
    std::string text;
    std::optional<Stamp> done_by;

    bool operator==(const TaskItem&) const = default;
};

struct QuestionResult {
    bool correct = false;
    std::int64_t t_ms = 0;

    bool operator==(const QuestionResult&) const = default;
};

struct QuestionState {
    std::map<Party, std::string> proposals;
    std::map<Party, std::string> votes;
    std::optional<std::string> agreement;
    std::optional<QuestionResult> result;

    bool operator==(const QuestionState&) const = default;
};

enum class RejectReason { not_colocated, awaiting_partner, already_answered };

std::string_view to_string(RejectReason reason);

struct SubmitOutcome {
    bool accepted = false;
    std::optional<RejectReason> reason;
    std::optional<bool> correct;
};

struct QuizReport {
    int score = 0;
    int total = 0;
    double duration_s = 0;
};

/// Task checklist plus quiz progress for one session.
///
/// Safety: a question receives a result only through an accepted submission,
/// which requires both robots on the same zone Z and both participants' votes
/// naming Z. Each question is answered at most once.
class ActivityState {
public:
    ActivityState(const Activity& activity, const ZoneMap& map);

    /// First ticker wins; repeats are no-ops. Throws DomainError for unknown ids.
    void tick_task(std::string_view task_id, Party who, std::int64_t t_ms);

    /// Makes q_id the shared current question, starting the quiz clock on the
    /// first call. Throws DomainError for unknown or answered questions.
    void navigate(std::string_view q_id, std::int64_t t_ms);

    /// Last write wins. Throws DomainError if q_id is not current, is answered,
    /// or zone_id is unknown.
    void propose_answer(std::string_view q_id, Party who, std::string_view zone_id);

    /// Records a vote; a vote also overwrites that participant's proposal.
    void cast_vote(std::string_view q_id, Party who, std::string_view zone_id);

    /// Evaluates the agreement gate with explicit live zones and votes.
    SubmitOutcome try_submit(std::string_view q_id, const std::optional<std::string>& live_zone_a,
                             const std::optional<std::string>& live_zone_b, const std::map<Party, std::string>& votes,
                             std::int64_t t_ms);

    /// Same, using the votes recorded for q_id.
    SubmitOutcome try_submit(std::string_view q_id, const std::optional<std::string>& live_zone_a,
                             const std::optional<std::string>& live_zone_b, std::int64_t t_ms);

    /// Throws DomainError until every question has a result.
    QuizReport quiz_report() const;

    const std::vector<TaskItem>& tasks() const { return tasks_; }
    const std::vector<QuizQuestion>& questions() const { return questions_; }
    const std::vector<QuestionState>& question_states() const { return states_; }
    const QuestionState& question_state(std::string_view q_id) const { return states_[index_of(q_id)]; }
    std::optional<std::string> current_question() const;
    std::optional<std::int64_t> quiz_started_t_ms() const { return started_; }
    std::optional<std::int64_t> quiz_finished_t_ms() const { return finished_; }
    int answered_count() const;
    bool quiz_finished() const { return finished_.has_value(); }

    nlohmann::json to_json() const;

    bool operator==(const ActivityState&) const = default;

private:
    std::size_t index_of(std::string_view q_id) const;
    void require_open(std::size_t index) const;

    const ZoneMap* map_;
    std::vector<TaskItem> tasks_;
    std::vector<QuizQuestion> questions_;
    std::vector<QuestionState> states_;
    std::optional<std::size_t> current_;
    std::optional<std::int64_t> started_;
    std::optional<std::int64_t> finished_;
};

/// Who receives an engine-generated envelope.
enum class Recipient { A, B, both };

struct Outbound {
    Recipient to = Recipient::both;
    Envelope envelope;
};

/// Drives an ActivityState from server-stamped client envelopes (zone,
/// task_tick, quiz_nav, propose, agree). Live zones are the last zone message
/// of each participant. Used by the session server and by offline replay.
class ActivityEngine {
public:
    ActivityEngine(const Activity& activity, const ZoneMap& map);

    /// Returns the server-originated replies (submit_result, quiz_nav).
    /// Throws DomainError for requests the state machine refuses.
    std::vector<Outbound> handle(const Envelope& e);

    const ActivityState& state() const { return state_; }
    const std::optional<std::string>& live_zone(Party who) const { return who == Party::A ? live_a_ : live_b_; }

private:
    const ZoneMap* map_;
    ActivityState state_;
    std::optional<std::string> live_a_;
    std::optional<std::string> live_b_;
};

/// Feeds the client-originated envelopes of an event log through a fresh engine.
ActivityState replay_activity(std::span<const Envelope> events, const Activity& activity, const ZoneMap& map);

} // namespace tactix
