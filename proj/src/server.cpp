#include "tactix/server.hpp"

#include "tactix/digest.hpp"
#include "tactix/errors.hpp"
#include "tactix/protocol.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace tactix {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::string_view ws_prefix = "/ws/session/";
constexpr std::string_view assets_prefix = "/assets/";

class Connection : public std::enable_shared_from_this<Connection> {
public:
    virtual ~Connection() = default;
    virtual void send(std::string frame) = 0;
    /// Closes once the queued frames are written.
    virtual void close() = 0;
};

} // namespace

struct Server::Impl {
    Impl(SessionConfig config, const ZoneMap& map, const Activity& activity, ServerOptions opts)
        : options(std::move(opts)),
          session(std::move(config), map, activity, options.sink),
          acceptor(io),
          heartbeat(io),
          epoch(std::chrono::steady_clock::now())
    {
        const tcp::endpoint ep(asio::ip::make_address(options.address), static_cast<unsigned short>(options.port));
        boost::system::error_code ec;
        acceptor.open(ep.protocol(), ec);
        if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
        if (!ec) acceptor.bind(ep, ec);
        if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
        if (ec) {
            if (ec == asio::error::address_in_use) throw std::runtime_error("port in use: " + std::to_string(options.port));
            throw std::runtime_error("cannot listen on " + options.address + ":" + std::to_string(options.port) + ": " +
                                     ec.message());
        }
        stats_copy = session.stats();
    }

    std::int64_t now_ms() const
    {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch).count();
    }

    void accept();
    void arm_heartbeat();

    ConnId attach(std::shared_ptr<Connection> c)
    {
        const ConnId id = next_id++;
        conns[id] = std::move(c);
        return id;
    }

    void dispatch(const std::vector<Action>& actions)
    {
        {
            // published before the writes, which may complete immediately
            std::lock_guard lock(stats_mu);
            stats_copy = session.stats();
        }
        for (const Action& a : actions) {
            const auto it = conns.find(a.conn);
            if (it == conns.end()) continue;
            it->second->send(encode(a.envelope));
            if (a.close_after) it->second->close();
        }
        if (options.sink) options.sink->flush();
    }

    void on_frame(ConnId id, std::string_view line) { dispatch(session.on_frame(id, line, now_ms())); }
    void on_framing_error(ConnId id, std::string_view what) { dispatch(session.on_protocol_error(id, what, now_ms())); }

    void on_closed(ConnId id)
    {
        if (conns.erase(id) == 0) return;
        dispatch(session.on_disconnect(id, now_ms()));
    }

    ServerOptions options;
    asio::io_context io;
    Session session;
    tcp::acceptor acceptor;
    asio::steady_timer heartbeat;
    std::chrono::steady_clock::time_point epoch;
    std::unordered_map<ConnId, std::shared_ptr<Connection>> conns;
    ConnId next_id = 1;
    mutable std::mutex stats_mu;
    SessionStats stats_copy;
};

namespace {

/// Feeds stream bytes through a LineFramer into the session.
class FramedInput {
public:
    bool feed(Server::Impl& server, ConnId id, std::string_view bytes, const bool& closing)
    {
        try {
            framer_.feed(bytes);
        } catch (const ProtocolError& e) {
            server.on_framing_error(id, e.what());
            return false;
        }
        while (!closing) {
            auto line = framer_.next();
            if (!line) break;
            server.on_frame(id, *line);
        }
        return !closing;
    }

private:
    LineFramer framer_;
};

class RawConnection final : public Connection {
public:
    RawConnection(Server::Impl& server, tcp::socket socket) : server_(server), socket_(std::move(socket)) {}

    void start(std::string_view initial)
    {
        id_ = server_.attach(shared_from_this());
        if (input_.feed(server_, id_, initial, closing_)) read();
    }

    void send(std::string frame) override
    {
        if (closing_) return;
        queue_.push_back(std::move(frame));
        if (!writing_) write();
    }

    void close() override
    {
        closing_ = true;
        if (!writing_) shutdown();
    }

private:
    void read()
    {
        socket_.async_read_some(asio::buffer(buf_), [self = shared(), this](boost::system::error_code ec, std::size_t n) {
            if (ec) return finish();
            if (closing_) return;
            if (input_.feed(server_, id_, {buf_.data(), n}, closing_)) read();
        });
    }

    void write()
    {
        writing_ = true;
        asio::async_write(socket_, asio::buffer(queue_.front()), [self = shared(), this](boost::system::error_code ec, std::size_t) {
            writing_ = false;
            if (ec) return finish();
            queue_.pop_front();
            if (!queue_.empty()) return write();
            if (closing_) shutdown();
        });
    }

    void shutdown()
    {
        boost::system::error_code ignored;
        socket_.shutdown(tcp::socket::shutdown_both, ignored);
        socket_.close(ignored);
        finish();
    }

    void finish()
    {
        if (finished_) return;
        finished_ = true;
        server_.on_closed(id_);
    }

    std::shared_ptr<RawConnection> shared() { return std::static_pointer_cast<RawConnection>(shared_from_this()); }

    Server::Impl& server_;
    tcp::socket socket_;
    ConnId id_ = 0;
    FramedInput input_;
    std::array<char, 4096> buf_{};
    std::deque<std::string> queue_;
    bool writing_ = false;
    bool closing_ = false;
    bool finished_ = false;
};

class WsConnection final : public Connection {
public:
    WsConnection(Server::Impl& server, beast::tcp_stream stream) : server_(server), ws_(std::move(stream)) {}

    void start(http::request<http::string_body> req, bool known_session)
    {
        ws_.text(true);
        ws_.async_accept(req, [self = shared(), this, known_session](beast::error_code ec) {
            if (ec) return;
            id_ = server_.attach(shared_from_this());
            if (!known_session) {
                // the path names a session this server does not host
                Envelope bye = msg::bye("unknown session");
                bye.from = Party::server;
                send(encode(bye));
                close();
                return;
            }
            read();
        });
    }

    void send(std::string frame) override
    {
        if (closing_) return;
        queue_.push_back(std::move(frame));
        if (!writing_) write();
    }

    void close() override
    {
        closing_ = true;
        if (!writing_) shutdown();
    }

private:
    void read()
    {
        ws_.async_read(buffer_, [self = shared(), this](beast::error_code ec, std::size_t) {
            if (ec) return finish();
            if (closing_) return;
            std::string text = beast::buffers_to_string(buffer_.data());
            buffer_.consume(buffer_.size());
            // a message is already a frame; the newline is optional
            if (text.empty() || text.back() != '\n') text.push_back('\n');
            if (input_.feed(server_, id_, text, closing_)) read();
        });
    }

    void write()
    {
        writing_ = true;
        ws_.async_write(asio::buffer(queue_.front()), [self = shared(), this](beast::error_code ec, std::size_t) {
            writing_ = false;
            if (ec) return finish();
            queue_.pop_front();
            if (!queue_.empty()) return write();
            if (closing_) shutdown();
        });
    }

    void shutdown()
    {
        if (shut_) return;
        shut_ = true;
        ws_.async_close(websocket::close_code::normal, [self = shared(), this](beast::error_code) { finish(); });
    }

    void finish()
    {
        if (finished_) return;
        finished_ = true;
        server_.on_closed(id_);
    }

    std::shared_ptr<WsConnection> shared() { return std::static_pointer_cast<WsConnection>(shared_from_this()); }

    Server::Impl& server_;
    websocket::stream<beast::tcp_stream> ws_;
    ConnId id_ = 0;
    FramedInput input_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    bool writing_ = false;
    bool closing_ = false;
    bool shut_ = false;
    bool finished_ = false;
};

/// Reads the first bytes of a fresh connection and hands it to the matching
/// protocol.
class Sniffer : public std::enable_shared_from_this<Sniffer> {
public:
    Sniffer(Server::Impl& server, tcp::socket socket) : server_(server), stream_(std::move(socket)) {}

    void start()
    {
        stream_.socket().set_option(tcp::no_delay(true));
        stream_.async_read_some(buffer_.prepare(4096), [self = shared_from_this(), this](beast::error_code ec, std::size_t n) {
            if (ec) return;
            buffer_.commit(n);
            const auto* first = static_cast<const char*>(buffer_.data().data());
            if (first[0] == '{') {
                const std::string initial(first, n);
                auto conn = std::make_shared<RawConnection>(server_, stream_.release_socket());
                conn->start(initial);
                return;
            }
            read_request();
        });
    }

private:
    void read_request()
    {
        http::async_read(stream_, buffer_, req_, [self = shared_from_this(), this](beast::error_code ec, std::size_t) {
            if (ec) return;
            const std::string target(req_.target());
            if (websocket::is_upgrade(req_) && target.starts_with(ws_prefix)) {
                const std::string id = target.substr(ws_prefix.size());
                auto conn = std::make_shared<WsConnection>(server_, std::move(stream_));
                conn->start(std::move(req_), id == server_.session.config().session_id);
                return;
            }
            respond();
        });
    }

    void respond()
    {
        auto res = std::make_shared<http::response<http::string_body>>();
        res->version(req_.version());
        res->keep_alive(false);
        res->set(http::field::server, "tactix");
        const std::string target(req_.target());
        const auto it = target.starts_with(assets_prefix) ? server_.options.assets.find(target.substr(assets_prefix.size()))
                                                          : server_.options.assets.end();
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            res->result(http::status::method_not_allowed);
            res->body() = "method not allowed\n";
        } else if (it == server_.options.assets.end()) {
            res->result(http::status::not_found);
            res->body() = "not found\n";
        } else {
            try {
                res->body() = read_file(it->second);
                res->result(http::status::ok);
                res->set(http::field::content_type, it->first.ends_with(".json") ? "application/json" : "application/octet-stream");
                res->set(http::field::access_control_allow_origin, "*");
            } catch (const std::exception&) {
                res->result(http::status::internal_server_error);
                res->body() = "asset unreadable\n";
            }
        }
        if (res->result() != http::status::ok) res->set(http::field::content_type, "text/plain");
        res->prepare_payload();
        if (req_.method() == http::verb::head) res->body().clear();
        http::async_write(stream_, *res, [self = shared_from_this(), this, res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    Server::Impl& server_;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

} // namespace

void Server::Impl::accept()
{
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
        if (ec == asio::error::operation_aborted) return;
        if (!ec) std::make_shared<Sniffer>(*this, std::move(socket))->start();
        accept();
    });
}

void Server::Impl::arm_heartbeat()
{
    heartbeat.expires_after(std::chrono::milliseconds(50));
    heartbeat.async_wait([this](boost::system::error_code ec) {
        if (ec) return;
        dispatch(session.on_timer(now_ms()));
        arm_heartbeat();
    });
}

Server::Server(SessionConfig config, const ZoneMap& map, const Activity& activity, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), map, activity, std::move(options)))
{
}

Server::~Server() = default;

int Server::port() const { return impl_->acceptor.local_endpoint().port(); }

const std::string& Server::session_id() const { return impl_->session.config().session_id; }

void Server::run()
{
    impl_->accept();
    impl_->arm_heartbeat();
    impl_->io.run();
}

void Server::stop()
{
    asio::post(impl_->io, [impl = impl_.get()] {
        boost::system::error_code ignored;
        impl->acceptor.close(ignored);
        impl->heartbeat.cancel();
        if (impl->options.sink) impl->options.sink->flush();
        impl->io.stop();
    });
}

SessionStats Server::stats() const
{
    std::lock_guard lock(impl_->stats_mu);
    return impl_->stats_copy;
}

} // namespace tactix
