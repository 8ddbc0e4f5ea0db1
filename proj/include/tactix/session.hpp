#pragma once

#include "tactix/activity.hpp"
#include "tactix/dynamics.hpp"
#include "tactix/haptics.hpp"
#include "tactix/protocol.hpp"
#include "tactix/trace.hpp"
#include "tactix/zone_map.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tactix {

inline constexpr int default_port = 7741;
inline constexpr std::int64_t heartbeat_period_ms = 1000;

struct SessionConfig {
    std::string session_id = "session";
    HapticMode mode = HapticMode::none;
    CouplingParams coupling;
    VibrationParams vibration;
    DynamicsParams dynamics; // mirrored by every client
    std::string map_hash;
    int pose_rate_hz = 20;
    int sim_rate_hz = 100;

    void validate() const;
    bool operator==(const SessionConfig&) const = default;
};

nlohmann::json to_json(const SessionConfig& c);
SessionConfig session_config_from_json(const nlohmann::json& j);

/// Digest recorded in the trace header; stable for equal configs.
std::string config_digest(const SessionConfig& c);

using ConnId = std::uint64_t;

/// An envelope to write on a connection, optionally closing it afterwards.
struct Action {
    ConnId conn = 0;
    Envelope envelope;
    bool close_after = false;
};

struct SessionStats {
    std::int64_t protocol_errors = 0;
    std::int64_t refused_requests = 0; // well-formed requests the activity refused
    std::int64_t relayed = 0;
    std::int64_t rejected_joins = 0;
};

/// Server-side state of one two-party session.
///
/// Transport-agnostic: the network server and the simulated harness hand it
/// decoded envelopes with their arrival time and write back the returned
/// actions. All mutations happen through these calls, which must be
/// serialized by the caller. Times passed in are milliseconds on any
/// monotone clock; the session clock starts at zero when the second
/// participant joins.
class Session {
public:
    Session(SessionConfig config, const ZoneMap& map, const Activity& activity, TraceSink* sink = nullptr);

    std::vector<Action> on_frame(ConnId conn, std::string_view line, std::int64_t now_ms);
    std::vector<Action> on_envelope(ConnId conn, Envelope e, std::int64_t now_ms);
    /// A framing failure detected by the transport (e.g. an oversized line).
    std::vector<Action> on_protocol_error(ConnId conn, std::string_view what, std::int64_t now_ms);
    std::vector<Action> on_disconnect(ConnId conn, std::int64_t now_ms);
    /// Emits heartbeats on the 1000 ms grid of the session clock.
    std::vector<Action> on_timer(std::int64_t now_ms);

    std::int64_t clock_ms(std::int64_t now_ms) const;
    bool started() const { return start_ms_.has_value(); }
    std::optional<Party> role_of(ConnId conn) const;
    std::optional<ConnId> conn_of(Party role) const;

    const SessionConfig& config() const { return config_; }
    const SessionStats& stats() const { return stats_; }
    const ActivityEngine& activity() const { return engine_; }

private:
    struct Member {
        ConnId conn;
        std::int64_t last_seq = INT64_MIN;
    };

    Envelope server_envelope(Envelope e, std::int64_t t_ms);
    std::int64_t stamp(std::int64_t now_ms);
    void log(const Envelope& e);
    std::vector<Action> handle_hello(ConnId conn, const Envelope& e, std::int64_t now_ms);
    std::vector<Action> drop_member(Party role, std::string_view reason, std::int64_t now_ms, bool notify_self);
    std::optional<Party> peer_of(Party role) const;

    SessionConfig config_;
    const ZoneMap* map_;
    TraceSink* sink_;
    ActivityEngine engine_;
    std::map<Party, Member> members_;
    std::optional<std::int64_t> start_ms_;
    std::int64_t last_stamp_ = 0;
    std::int64_t next_heartbeat_ms_ = heartbeat_period_ms;
    std::int64_t server_seq_ = 0;
    SessionStats stats_;
};

} // namespace tactix
