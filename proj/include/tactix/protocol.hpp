#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

namespace tactix {

inline constexpr int protocol_version = 1;

enum class MessageType {
    hello,
    session_start,
    pose,
    zone,
    consensus_edge,
    task_tick,
    quiz_nav,
    propose,
    agree,
    submit_result,
    heartbeat,
    bye,
};

enum class Party { A, B, server };

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view name);
std::string_view to_string(Party party);
Party parse_party(std::string_view name);

/// One message of the two-party session protocol.
struct Envelope {
    int v = protocol_version;
    MessageType type = MessageType::heartbeat;
    std::int64_t seq = 0;  // strictly increasing per sender
    std::int64_t t_ms = 0; // server session clock
    Party from = Party::server;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const Envelope&) const = default;
};

nlohmann::json to_json(const Envelope& e);

/// Validates version, kind and the payload fields required for that kind.
/// Throws ProtocolError.
Envelope from_json(const nlohmann::json& j);

/// One JSON object followed by '\n'.
std::string encode(const Envelope& e);

/// Decodes exactly one frame; a trailing '\n' is optional. Throws ProtocolError
/// for malformed JSON, an unknown kind or a version mismatch.
Envelope decode(std::string_view line);

/// Splits a byte stream into newline-terminated frames. An unterminated tail
/// stays buffered until more bytes arrive.
class LineFramer {
public:
    explicit LineFramer(std::size_t max_line_bytes = 1 << 20) : max_line_(max_line_bytes) {}

    /// Throws ProtocolError when a single line exceeds the limit.
    void feed(std::string_view bytes);
    std::optional<std::string> next();
    bool has_partial() const { return !partial_.empty(); }

private:
    std::size_t max_line_;
    std::string partial_;
    std::deque<std::string> ready_;
};

// Payload builders for the message kinds.
namespace msg {

Envelope hello(std::string_view map_hash, std::string_view session_id = {});
Envelope pose(double x_mm, double y_mm, double theta_rad);
Envelope zone(std::string_view zone_id);
Envelope consensus_edge(bool entered);
Envelope task_tick(std::string_view task_id, bool done = true);
Envelope quiz_nav(std::string_view q_id);
Envelope propose(std::string_view q_id, std::string_view zone_id);
Envelope agree(std::string_view q_id, std::string_view zone_id);
Envelope heartbeat();
Envelope bye(std::string_view reason);

} // namespace msg

} // namespace tactix
