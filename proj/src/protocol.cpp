#include "tactix/protocol.hpp"

#include "tactix/errors.hpp"

#include <array>
#include <utility>

namespace tactix {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 12> type_names{{
    {MessageType::hello, "hello"},
    {MessageType::session_start, "session_start"},
    {MessageType::pose, "pose"},
    {MessageType::zone, "zone"},
    {MessageType::consensus_edge, "consensus_edge"},
    {MessageType::task_tick, "task_tick"},
    {MessageType::quiz_nav, "quiz_nav"},
    {MessageType::propose, "propose"},
    {MessageType::agree, "agree"},
    {MessageType::submit_result, "submit_result"},
    {MessageType::heartbeat, "heartbeat"},
    {MessageType::bye, "bye"},
}};

void require(const json& payload, const char* field, json::value_t kind, std::string_view type)
{
    const auto it = payload.find(field);
    bool ok = it != payload.end();
    if (ok) {
        if (kind == json::value_t::number_float)
            ok = it->is_number();
        else if (kind == json::value_t::number_integer)
            ok = it->is_number_integer();
        else
            ok = it->type() == kind;
    }
    if (!ok) throw ProtocolError(std::string(type) + ": missing or mistyped field '" + field + "'");
}

void validate_payload(MessageType type, const json& p)
{
    const auto name = to_string(type);
    if (!p.is_object()) throw ProtocolError(std::string(name) + ": payload must be an object");
    using vt = json::value_t;
    switch (type) {
    case MessageType::hello:
        require(p, "map_hash", vt::string, name);
        break;
    case MessageType::pose:
        require(p, "x_mm", vt::number_float, name);
        require(p, "y_mm", vt::number_float, name);
        require(p, "theta_rad", vt::number_float, name);
        break;
    case MessageType::zone:
        require(p, "zone_id", vt::string, name);
        break;
    case MessageType::consensus_edge: {
        require(p, "edge", vt::string, name);
        const auto edge = p.at("edge").get<std::string>();
        if (edge != "entered" && edge != "exited") throw ProtocolError("consensus_edge: edge must be entered|exited");
        break;
    }
    case MessageType::task_tick:
        require(p, "task_id", vt::string, name);
        require(p, "done", vt::boolean, name);
        break;
    case MessageType::quiz_nav:
        require(p, "q_id", vt::string, name);
        break;
    case MessageType::propose:
    case MessageType::agree:
        require(p, "q_id", vt::string, name);
        require(p, "zone_id", vt::string, name);
        break;
    case MessageType::submit_result:
        require(p, "q_id", vt::string, name);
        require(p, "accepted", vt::boolean, name);
        break;
    case MessageType::session_start:
    case MessageType::heartbeat:
    case MessageType::bye:
        break;
    }
}

} // namespace

std::string_view to_string(MessageType type)
{
    for (const auto& [t, n] : type_names)
        if (t == type) return n;
    return "unknown";
}

std::optional<MessageType> parse_message_type(std::string_view name)
{
    for (const auto& [t, n] : type_names)
        if (n == name) return t;
    return std::nullopt;
}

std::string_view to_string(Party party)
{
    switch (party) {
    case Party::A: return "A";
    case Party::B: return "B";
    case Party::server: return "server";
    }
    return "server";
}

Party parse_party(std::string_view name)
{
    if (name == "A") return Party::A;
    if (name == "B") return Party::B;
    if (name == "server") return Party::server;
    throw ProtocolError("unknown sender '" + std::string(name) + "'");
}

json to_json(const Envelope& e)
{
    return json{{"v", e.v},
                {"type", std::string(to_string(e.type))},
                {"seq", e.seq},
                {"t_ms", e.t_ms},
                {"from", std::string(to_string(e.from))},
                {"payload", e.payload}};
}

Envelope from_json(const json& j)
{
    if (!j.is_object()) throw ProtocolError("envelope must be a JSON object");
    Envelope e;
    try {
        e.v = j.at("v").get<int>();
        if (e.v != protocol_version)
            throw ProtocolError("version mismatch: got " + std::to_string(e.v) + ", expected " +
                                std::to_string(protocol_version));
        const auto type_name = j.at("type").get<std::string>();
        const auto type = parse_message_type(type_name);
        if (!type) throw ProtocolError("unknown message type '" + type_name + "'");
        e.type = *type;
        e.seq = j.at("seq").get<std::int64_t>();
        e.t_ms = j.value("t_ms", std::int64_t{0});
        e.from = parse_party(j.at("from").get<std::string>());
        e.payload = j.value("payload", json::object());
    } catch (const json::exception& ex) {
        throw ProtocolError(std::string("bad envelope: ") + ex.what());
    }
    validate_payload(e.type, e.payload);
    return e;
}

std::string encode(const Envelope& e)
{
    std::string out = to_json(e).dump();
    out.push_back('\n');
    return out;
}

Envelope decode(std::string_view line)
{
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& ex) {
        throw ProtocolError(std::string("malformed JSON: ") + ex.what());
    }
    return from_json(j);
}

void LineFramer::feed(std::string_view bytes)
{
    for (char c : bytes) {
        if (c == '\n') {
            if (!partial_.empty()) ready_.push_back(std::move(partial_));
            partial_.clear();
            continue;
        }
        partial_.push_back(c);
        if (partial_.size() > max_line_) throw ProtocolError("frame exceeds maximum line length");
    }
}

std::optional<std::string> LineFramer::next()
{
    if (ready_.empty()) return std::nullopt;
    std::string line = std::move(ready_.front());
    ready_.pop_front();
    return line;
}

namespace msg {

namespace {
Envelope make(MessageType type, json payload)
{
    Envelope e;
    e.type = type;
    e.payload = std::move(payload);
    return e;
}
} // namespace

Envelope hello(std::string_view map_hash, std::string_view session_id)
{
    json p = {{"map_hash", map_hash}};
    if (!session_id.empty()) p["session_id"] = session_id;
    return make(MessageType::hello, std::move(p));
}

Envelope pose(double x_mm, double y_mm, double theta_rad)
{
    return make(MessageType::pose, {{"x_mm", x_mm}, {"y_mm", y_mm}, {"theta_rad", theta_rad}});
}

Envelope zone(std::string_view zone_id) { return make(MessageType::zone, {{"zone_id", zone_id}}); }

Envelope consensus_edge(bool entered)
{
    return make(MessageType::consensus_edge, {{"edge", entered ? "entered" : "exited"}});
}

Envelope task_tick(std::string_view task_id, bool done)
{
    return make(MessageType::task_tick, {{"task_id", task_id}, {"done", done}});
}

Envelope quiz_nav(std::string_view q_id) { return make(MessageType::quiz_nav, {{"q_id", q_id}}); }

Envelope propose(std::string_view q_id, std::string_view zone_id)
{
    return make(MessageType::propose, {{"q_id", q_id}, {"zone_id", zone_id}});
}

Envelope agree(std::string_view q_id, std::string_view zone_id)
{
    return make(MessageType::agree, {{"q_id", q_id}, {"zone_id", zone_id}});
}

Envelope heartbeat() { return make(MessageType::heartbeat, json::object()); }

Envelope bye(std::string_view reason) { return make(MessageType::bye, {{"reason", reason}}); }

} // namespace msg

} // namespace tactix
