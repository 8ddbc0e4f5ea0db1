#pragma once

#include "tactix/rng.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

namespace tactix {

/// Simulated network delay: base +/- uniform jitter per message, seeded.
struct LatencyProfile {
    std::int64_t base_delay_ms = 0;
    std::int64_t jitter_ms = 0;
    std::uint64_t seed = 0;

    bool operator==(const LatencyProfile&) const = default;
};

/// One direction of an in-process byte-message channel on the session clock.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(std::int64_t now_ms, std::string bytes) = 0;
    /// Messages due at or before now_ms, in send order.
    virtual std::vector<std::string> poll(std::int64_t now_ms) = 0;
    virtual std::size_t in_flight() const = 0;
};

/// Zero-delay channel: whatever was sent is delivered on the next poll.
class DirectChannel final : public Channel {
public:
    void send(std::int64_t now_ms, std::string bytes) override;
    std::vector<std::string> poll(std::int64_t now_ms) override;
    std::size_t in_flight() const override { return queue_.size(); }

private:
    std::deque<std::string> queue_;
};

struct ScheduledMessage {
    std::int64_t sent_ms = 0;
    std::int64_t deliver_ms = 0;

    bool operator==(const ScheduledMessage&) const = default;
};

/// Delays each message by base +/- uniform(jitter) ms. Delivery times are
/// monotonized so a message never overtakes an earlier one.
class DelayedChannel final : public Channel {
public:
    explicit DelayedChannel(LatencyProfile profile);

    void send(std::int64_t now_ms, std::string bytes) override;
    std::vector<std::string> poll(std::int64_t now_ms) override;
    std::size_t in_flight() const override { return queue_.size(); }

    /// Every (sent, deliver) pair assigned so far, in send order.
    const std::vector<ScheduledMessage>& schedule() const { return schedule_; }

private:
    struct Pending {
        std::int64_t deliver_ms;
        std::string bytes;
    };

    LatencyProfile profile_;
    Rng rng_;
    std::int64_t last_deliver_ms_ = INT64_MIN;
    std::deque<Pending> queue_;
    std::vector<ScheduledMessage> schedule_;
};

/// Duplex link between one client and the server.
struct DuplexLink {
    std::unique_ptr<Channel> to_server;
    std::unique_ptr<Channel> to_client;
};

/// Builds a duplex link; each direction draws from its own seeded stream.
/// A (0, 0, *) profile yields direct channels.
DuplexLink simulated_transport(const LatencyProfile& profile, std::uint64_t link_index = 0);

} // namespace tactix
