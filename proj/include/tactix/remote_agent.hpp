#pragma once

#include "tactix/activity.hpp"
#include "tactix/agent.hpp"
#include "tactix/zone_map.hpp"

#include <cstdint>
#include <string>

namespace tactix {

struct RemoteAgentOptions {
    std::string host = "127.0.0.1";
    int port = default_port;
    Vec2 start{40.0, 105.0};
    /// Give up after this much wall-clock time.
    std::int64_t timeout_ms = 600'000;
    /// Keep ticking this long after the quiz finishes, then say bye.
    std::int64_t tail_ms = 500;
};

struct RemoteAgentResult {
    ClientStats stats;
    bool quiz_done = false;
    std::optional<Party> role;
};

/// Runs a scripted participant against a live server over raw TCP on the
/// wall clock at the script's simulation rate. Blocks until the quiz is done,
/// the server closes the connection, or the timeout expires.
RemoteAgentResult run_remote_agent(const AgentScript& script, const ZoneMap& map, const Activity& activity,
                                   const std::string& map_hash, const RemoteAgentOptions& options);

} // namespace tactix
