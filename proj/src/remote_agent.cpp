#include "tactix/remote_agent.hpp"

#include "tactix/errors.hpp"

#include <boost/asio.hpp>

#include <chrono>
#include <thread>

namespace tactix {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

RemoteAgentResult run_remote_agent(const AgentScript& script, const ZoneMap& map, const Activity& activity,
                                   const std::string& map_hash, const RemoteAgentOptions& options)
{
    asio::io_context io;
    tcp::socket socket(io);
    tcp::resolver resolver(io);
    asio::connect(socket, resolver.resolve(options.host, std::to_string(options.port)));
    socket.set_option(tcp::no_delay(true));
    socket.non_blocking(true);

    SimClient client(script, map, activity, map_hash, options.start);
    LineFramer framer;
    const auto epoch = std::chrono::steady_clock::now();
    auto local_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch).count();
    };
    auto send = [&](const Envelope& e) {
        const std::string frame = encode(e);
        socket.non_blocking(false);
        asio::write(socket, asio::buffer(frame));
        socket.non_blocking(true);
    };

    std::optional<std::int64_t> done_at;
    bool open = true;
    std::array<char, 8192> buf{};
    std::int64_t next_tick = 0;
    const std::int64_t period = 10;
    while (open && local_ms() < options.timeout_ms) {
        for (;;) {
            boost::system::error_code ec;
            const std::size_t n = socket.read_some(asio::buffer(buf), ec);
            if (ec == asio::error::would_block) break;
            if (ec) {
                open = false;
                break;
            }
            framer.feed({buf.data(), n});
        }
        while (auto line = framer.next()) client.on_receive(decode(*line), local_ms());
        if (!open) break;

        for (const auto& e : client.tick(local_ms())) send(e);
        if (client.quiz_done() && !done_at) done_at = local_ms();
        if (done_at && local_ms() - *done_at >= options.tail_ms) {
            send(client.leave("done", local_ms()));
            break;
        }
        next_tick += period;
        std::this_thread::sleep_until(epoch + std::chrono::milliseconds(next_tick));
    }
    boost::system::error_code ignored;
    socket.shutdown(tcp::socket::shutdown_both, ignored);
    return {client.stats(), client.quiz_done(), client.role()};
}

} // namespace tactix
