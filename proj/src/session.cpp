#include "tactix/session.hpp"

#include "tactix/digest.hpp"
#include "tactix/errors.hpp"

namespace tactix {

using nlohmann::json;

void SessionConfig::validate() const
{
    coupling.validate();
    vibration.validate();
    dynamics.validate();
    if (pose_rate_hz <= 0 || sim_rate_hz <= 0 || sim_rate_hz % pose_rate_hz != 0)
        throw ValidationError("sim_rate_hz must be a positive multiple of pose_rate_hz");
}

json to_json(const SessionConfig& c)
{
    return {{"session_id", c.session_id},
            {"mode", std::string(to_string(c.mode))},
            {"coupling",
             {{"k", c.coupling.k},
              {"deadzone_mm", c.coupling.deadzone_mm},
              {"f_max", c.coupling.f_max},
              {"stale_ms", c.coupling.stale_ms},
              {"decay_ms", c.coupling.decay_ms},
              {"pull_grasped", c.coupling.pull_grasped}}},
            {"vibration", {{"amplitude", c.vibration.amplitude}, {"freq_hz", c.vibration.freq_hz}}},
            {"dynamics",
             {{"mass_eq", c.dynamics.mass_eq},
              {"damping", c.dynamics.damping},
              {"v_max", c.dynamics.v_max},
              {"dt_s", c.dynamics.dt_s}}},
            {"map_hash", c.map_hash},
            {"pose_rate_hz", c.pose_rate_hz},
            {"sim_rate_hz", c.sim_rate_hz}};
}

SessionConfig session_config_from_json(const json& j)
{
    try {
        SessionConfig c;
        c.session_id = j.value("session_id", c.session_id);
        c.mode = parse_haptic_mode(j.value("mode", std::string("none")));
        if (j.contains("coupling")) {
            const auto& cj = j.at("coupling");
            c.coupling.k = cj.value("k", c.coupling.k);
            c.coupling.deadzone_mm = cj.value("deadzone_mm", c.coupling.deadzone_mm);
            c.coupling.f_max = cj.value("f_max", c.coupling.f_max);
            c.coupling.stale_ms = cj.value("stale_ms", c.coupling.stale_ms);
            c.coupling.decay_ms = cj.value("decay_ms", c.coupling.decay_ms);
            c.coupling.pull_grasped = cj.value("pull_grasped", c.coupling.pull_grasped);
        }
        if (j.contains("vibration")) {
            const auto& vj = j.at("vibration");
            c.vibration.amplitude = vj.value("amplitude", c.vibration.amplitude);
            c.vibration.freq_hz = vj.value("freq_hz", c.vibration.freq_hz);
        }
        if (j.contains("dynamics")) {
            const auto& dj = j.at("dynamics");
            c.dynamics.mass_eq = dj.value("mass_eq", c.dynamics.mass_eq);
            c.dynamics.damping = dj.value("damping", c.dynamics.damping);
            c.dynamics.v_max = dj.value("v_max", c.dynamics.v_max);
            c.dynamics.dt_s = dj.value("dt_s", c.dynamics.dt_s);
        }
        c.map_hash = j.value("map_hash", std::string{});
        c.pose_rate_hz = j.value("pose_rate_hz", c.pose_rate_hz);
        c.sim_rate_hz = j.value("sim_rate_hz", c.sim_rate_hz);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("session config: ") + e.what());
    }
}

std::string config_digest(const SessionConfig& c) { return sha256_hex(to_json(c).dump()); }

Session::Session(SessionConfig config, const ZoneMap& map, const Activity& activity, TraceSink* sink)
    : config_(std::move(config)), map_(&map), sink_(sink), engine_(activity, map)
{
    config_.validate();
}

std::int64_t Session::clock_ms(std::int64_t now_ms) const
{
    return start_ms_ ? std::max<std::int64_t>(0, now_ms - *start_ms_) : 0;
}

std::int64_t Session::stamp(std::int64_t now_ms)
{
    last_stamp_ = std::max(last_stamp_, clock_ms(now_ms));
    return last_stamp_;
}

std::optional<Party> Session::role_of(ConnId conn) const
{
    for (const auto& [role, m] : members_)
        if (m.conn == conn) return role;
    return std::nullopt;
}

std::optional<ConnId> Session::conn_of(Party role) const
{
    const auto it = members_.find(role);
    if (it == members_.end()) return std::nullopt;
    return it->second.conn;
}

std::optional<Party> Session::peer_of(Party role) const
{
    const Party other = role == Party::A ? Party::B : Party::A;
    if (members_.contains(other)) return other;
    return std::nullopt;
}

Envelope Session::server_envelope(Envelope e, std::int64_t t_ms)
{
    e.from = Party::server;
    e.seq = ++server_seq_;
    e.t_ms = t_ms;
    return e;
}

void Session::log(const Envelope& e)
{
    if (sink_ && e.type != MessageType::pose && e.type != MessageType::heartbeat) sink_->event(e);
}

std::vector<Action> Session::drop_member(Party role, std::string_view reason, std::int64_t now_ms, bool notify_self)
{
    std::vector<Action> out;
    const auto it = members_.find(role);
    if (it == members_.end()) return out;
    const std::int64_t t = stamp(now_ms);
    if (notify_self) out.push_back({it->second.conn, server_envelope(msg::bye(reason), t), true});
    members_.erase(it);
    if (const auto peer = peer_of(role)) {
        Envelope lost = msg::bye("peer lost");
        lost.payload["role"] = std::string(to_string(role));
        lost = server_envelope(std::move(lost), t);
        log(lost);
        out.push_back({members_.at(*peer).conn, lost, false});
    }
    return out;
}

std::vector<Action> Session::on_frame(ConnId conn, std::string_view line, std::int64_t now_ms)
{
    Envelope e;
    try {
        e = decode(line);
    } catch (const ProtocolError& err) {
        return on_protocol_error(conn, err.what(), now_ms);
    }
    return on_envelope(conn, std::move(e), now_ms);
}

std::vector<Action> Session::on_protocol_error(ConnId conn, std::string_view what, std::int64_t now_ms)
{
    ++stats_.protocol_errors;
    const std::string reason = "protocol violation: " + std::string(what);
    if (const auto role = role_of(conn)) return drop_member(*role, reason, now_ms, true);
    return {{conn, server_envelope(msg::bye(reason), stamp(now_ms)), true}};
}

std::vector<Action> Session::handle_hello(ConnId conn, const Envelope& e, std::int64_t now_ms)
{
    const std::int64_t t = stamp(now_ms);
    auto reject = [&](std::string_view reason) -> std::vector<Action> {
        ++stats_.rejected_joins;
        return {{conn, server_envelope(msg::bye(reason), t), true}};
    };
    if (members_.size() >= 2) return reject("session full");
    if (e.payload.at("map_hash").get<std::string>() != config_.map_hash) return reject("map mismatch");
    if (const auto sid = e.payload.value("session_id", std::string{}); !sid.empty() && sid != config_.session_id)
        return reject("unknown session");

    const Party role = members_.contains(Party::A) ? Party::B : Party::A;
    members_[role] = Member{conn, e.seq};

    std::vector<Action> out;
    Envelope joined = e;
    joined.from = role;
    joined.t_ms = t;
    log(joined);

    if (members_.size() < 2) return out;

    auto start_for = [&](Party who) {
        Envelope s;
        s.type = MessageType::session_start;
        s.payload = to_json(config_);
        s.payload["role"] = std::string(to_string(who));
        return s;
    };
    if (!start_ms_) {
        start_ms_ = now_ms;
        last_stamp_ = 0;
        Envelope logged;
        logged.type = MessageType::session_start;
        logged.payload = to_json(config_);
        log(server_envelope(logged, 0));
        for (const auto& [who, m] : members_) out.push_back({m.conn, server_envelope(start_for(who), 0), false});
    } else {
        // rejoin after a drop: only the newcomer needs the configuration
        out.push_back({conn, server_envelope(start_for(role), t), false});
        if (const auto peer = peer_of(role)) out.push_back({members_.at(*peer).conn, joined, false});
    }
    return out;
}

std::vector<Action> Session::on_envelope(ConnId conn, Envelope e, std::int64_t now_ms)
{
    const auto role = role_of(conn);
    if (!role) {
        if (e.type != MessageType::hello) {
            ++stats_.protocol_errors;
            return {{conn, server_envelope(msg::bye("protocol violation: expected hello"), stamp(now_ms)), true}};
        }
        return handle_hello(conn, e, now_ms);
    }

    Member& self = members_.at(*role);
    if (e.seq <= self.last_seq) {
        ++stats_.protocol_errors;
        return drop_member(*role, "protocol violation: seq regression", now_ms, true);
    }
    self.last_seq = e.seq;
    e.from = *role;

    switch (e.type) {
    case MessageType::hello:
    case MessageType::session_start:
    case MessageType::submit_result:
        ++stats_.protocol_errors;
        return drop_member(*role, "protocol violation: unexpected " + std::string(to_string(e.type)), now_ms, true);
    case MessageType::bye: {
        e.t_ms = stamp(now_ms);
        log(e);
        auto out = drop_member(*role, "bye", now_ms, false);
        out.push_back({conn, server_envelope(msg::bye("bye"), e.t_ms), true});
        return out;
    }
    case MessageType::heartbeat:
        return {};
    case MessageType::consensus_edge:
        if (config_.mode != HapticMode::consensus) {
            ++stats_.protocol_errors;
            return drop_member(*role, "protocol violation: consensus_edge outside consensus mode", now_ms, true);
        }
        break;
    default:
        break;
    }

    // waiting for the partner: nothing to relay yet
    if (!start_ms_) return {};

    e.t_ms = stamp(now_ms);
    std::vector<Action> out;
    const auto peer = peer_of(*role);

    if (e.type == MessageType::pose) {
        if (sink_) {
            const Vec2 p(e.payload.at("x_mm").get<double>(), e.payload.at("y_mm").get<double>());
            const Vec2 clamped = map_->clamp_to_bounds(is_finite(p) ? p : Vec2::Zero());
            sink_->sample({e.t_ms, *role, clamped.x(), clamped.y(), e.payload.at("theta_rad").get<double>(),
                           map_->locate(clamped)});
        }
    } else {
        std::vector<Outbound> replies;
        try {
            replies = engine_.handle(e);
        } catch (const DomainError&) {
            ++stats_.refused_requests;
            return {};
        }
        log(e);
        for (auto& r : replies) {
            Envelope reply = server_envelope(std::move(r.envelope), e.t_ms);
            log(reply);
            for (const auto& [who, m] : members_) {
                const bool wanted = r.to == Recipient::both || (r.to == Recipient::A && who == Party::A) ||
                                    (r.to == Recipient::B && who == Party::B);
                if (wanted) out.push_back({m.conn, reply, false});
            }
        }
        if (e.type == MessageType::quiz_nav) return out;
    }
    if (peer) {
        ++stats_.relayed;
        out.insert(out.begin(), Action{members_.at(*peer).conn, e, false});
    }
    return out;
}

std::vector<Action> Session::on_disconnect(ConnId conn, std::int64_t now_ms)
{
    const auto role = role_of(conn);
    if (!role) return {};
    return drop_member(*role, "disconnected", now_ms, false);
}

std::vector<Action> Session::on_timer(std::int64_t now_ms)
{
    std::vector<Action> out;
    if (!start_ms_ || clock_ms(now_ms) < next_heartbeat_ms_) return out;
    const std::int64_t t = stamp(now_ms);
    while (next_heartbeat_ms_ <= t) next_heartbeat_ms_ += heartbeat_period_ms;
    const Envelope hb = server_envelope(msg::heartbeat(), t);
    for (const auto& [who, m] : members_) out.push_back({m.conn, hb, false});
    return out;
}

} // namespace tactix
