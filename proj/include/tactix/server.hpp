#pragma once

#include "tactix/activity.hpp"
#include "tactix/session.hpp"
#include "tactix/trace.hpp"
#include "tactix/zone_map.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace tactix {

struct ServerOptions {
    std::string address = "127.0.0.1";
    int port = default_port; // 0 picks a free port
    /// Files served under /assets/<name>.
    std::map<std::string, std::string> assets;
    TraceSink* sink = nullptr;
};

/// One session on one port. The first byte of a connection selects the
/// framing: '{' starts a raw newline-JSON stream, anything else is parsed as
/// HTTP (a WebSocket upgrade on /ws/session/{id}, or GET /assets/<name>).
///
/// Everything runs on a single event loop, so session calls are serialized.
class Server {
public:
    /// Binds immediately; throws std::runtime_error("port in use: ...") when
    /// the port is taken.
    Server(SessionConfig config, const ZoneMap& map, const Activity& activity, ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    int port() const;
    const std::string& session_id() const;

    /// Runs the event loop until stop().
    void run();
    /// Thread-safe.
    void stop();

    /// Snapshot taken on the event loop; safe to call from another thread
    /// while run() is active.
    SessionStats stats() const;

    struct Impl; // connection handlers reach the session through it

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace tactix
