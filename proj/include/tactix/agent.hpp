#pragma once

#include "tactix/activity.hpp"
#include "tactix/dynamics.hpp"
#include "tactix/haptics.hpp"
#include "tactix/protocol.hpp"
#include "tactix/rng.hpp"
#include "tactix/session.hpp"
#include "tactix/zone_map.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tactix {

/// Behavior script of one simulated participant.
struct AgentScript {
    std::vector<std::string> itinerary;
    std::int64_t dwell_ms = 3000;
    double drag_gain = 0.08;   // force / mm
    double noise_std_mm = 5.0; // per-stop target jitter
    std::uint64_t seed = 0;
    std::map<std::string, std::string> quiz_policy; // q_id -> zone_id; empty means the answer key
    bool disagree_first = false;
    std::int64_t settle_ms = 500;  // time on the answer zone before voting
    std::int64_t revote_ms = 1000; // re-vote period while a question stays open

    bool operator==(const AgentScript&) const = default;
};

nlohmann::json to_json(const AgentScript& s);
AgentScript agent_script_from_json(const nlohmann::json& j);

/// Proportional drag toward a jittered zone target, with dwell-based
/// itinerary progress. The drag force is capped at 2 * f_max.
class Agent {
public:
    Agent(AgentScript script, const ZoneMap& map, double force_cap);

    /// Force the participant's hand applies this tick. Advances to the next
    /// itinerary stop after dwell_ms spent continuously inside the target zone.
    Vec2 agent_tick(const RobotState& state, std::int64_t now_ms);

    /// Redirects the agent to a zone outside the itinerary (quiz answers).
    void retarget(const std::string& zone_id);

    const std::string& target_zone() const { return target_zone_; }
    const Vec2& target_point() const { return target_; }
    bool itinerary_done() const { return stop_ >= script_.itinerary.size(); }
    std::size_t stop_index() const { return stop_; }
    /// Zones whose dwell completed since the last call.
    std::vector<std::string> take_completed_stops();
    /// Milliseconds spent continuously inside the target zone, 0 when outside.
    std::int64_t time_in_target(std::int64_t now_ms) const;

    const AgentScript& script() const { return script_; }

private:
    void begin_stop();

    AgentScript script_;
    const ZoneMap* map_;
    double force_cap_;
    Rng rng_;
    std::size_t stop_ = 0;
    std::string target_zone_;
    Vec2 target_ = Vec2::Zero();
    std::optional<std::int64_t> inside_since_;
    bool free_target_ = false; // retargeted: no dwell progress
    std::vector<std::string> completed_;
};

struct ClientStats {
    std::int64_t sent = 0;
    std::int64_t received = 0;
    std::int64_t partner_poses = 0;
    std::int64_t last_partner_pose_seq = 0;
    std::int64_t out_of_order = 0;
    std::int64_t rejections = 0;
    double max_haptic_force = 0;
    bool all_forces_finite = true;
    std::vector<std::string> server_byes;
};

/// A simulated participant speaking the session protocol: owns the robot,
/// runs the haptic pipeline against its view of the partner and drives the
/// agent through exploration, then the quiz.
class SimClient {
public:
    SimClient(AgentScript script, const ZoneMap& map, const Activity& activity, std::string map_hash, Vec2 start,
              std::int64_t hello_at_ms = 0);

    void on_receive(const Envelope& e, std::int64_t local_ms);
    /// One simulation tick; returns the envelopes to send.
    std::vector<Envelope> tick(std::int64_t local_ms);
    /// A properly sequenced bye for leaving the session.
    Envelope leave(std::string_view reason, std::int64_t local_ms);

    const RobotState& state() const { return state_; }
    std::optional<Party> role() const { return role_; }
    bool started() const { return config_.has_value(); }
    bool quiz_done() const { return quiz_done_; }
    const ClientStats& stats() const { return stats_; }
    const std::optional<PartnerView>& partner() const { return partner_; }
    const Agent& agent() const { return agent_; }

private:
    enum class Phase { exploring, waiting_quiz, quiz, done };

    Envelope outgoing(Envelope e, std::int64_t session_ms);
    std::string policy_zone(const std::string& q_id) const;
    std::string wrong_zone(const std::string& right) const;

    const ZoneMap* map_;
    const Activity* activity_;
    std::string map_hash_;
    Agent agent_;
    RobotState state_;
    std::int64_t hello_at_ms_;
    bool hello_sent_ = false;
    std::optional<SessionConfig> config_;
    std::optional<Party> role_;
    std::optional<HapticPipeline> haptics_;
    std::optional<PartnerView> partner_;
    std::int64_t start_local_ms_ = 0;
    std::int64_t seq_ = 0;
    std::int64_t ticks_ = 0;
    std::string last_zone_sent_;
    std::set<std::string> ticked_tasks_;
    ClientStats stats_;

    Phase phase_ = Phase::exploring;
    bool quiz_started_seen_ = false;
    std::optional<std::string> current_q_;
    std::set<std::string> disagreed_;
    std::optional<std::int64_t> last_vote_ms_;
    bool quiz_done_ = false;
};

} // namespace tactix
