#include "tactix/transport.hpp"

#include <algorithm>

namespace tactix {

void DirectChannel::send(std::int64_t, std::string bytes) { queue_.push_back(std::move(bytes)); }

std::vector<std::string> DirectChannel::poll(std::int64_t)
{
    std::vector<std::string> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

DelayedChannel::DelayedChannel(LatencyProfile profile) : profile_(profile), rng_(profile.seed) {}

void DelayedChannel::send(std::int64_t now_ms, std::string bytes)
{
    std::int64_t delay = profile_.base_delay_ms;
    if (profile_.jitter_ms > 0) delay += rng_.uniform_int(-profile_.jitter_ms, profile_.jitter_ms);
    const std::int64_t deliver = std::max(now_ms + std::max<std::int64_t>(delay, 0), last_deliver_ms_);
    last_deliver_ms_ = deliver;
    schedule_.push_back({now_ms, deliver});
    queue_.push_back({deliver, std::move(bytes)});
}

std::vector<std::string> DelayedChannel::poll(std::int64_t now_ms)
{
    std::vector<std::string> out;
    while (!queue_.empty() && queue_.front().deliver_ms <= now_ms) {
        out.push_back(std::move(queue_.front().bytes));
        queue_.pop_front();
    }
    return out;
}

DuplexLink simulated_transport(const LatencyProfile& profile, std::uint64_t link_index)
{
    if (profile.base_delay_ms == 0 && profile.jitter_ms == 0)
        return {std::make_unique<DirectChannel>(), std::make_unique<DirectChannel>()};
    LatencyProfile up = profile;
    LatencyProfile down = profile;
    up.seed = Rng::derive(profile.seed, 2 * link_index);
    down.seed = Rng::derive(profile.seed, 2 * link_index + 1);
    return {std::make_unique<DelayedChannel>(up), std::make_unique<DelayedChannel>(down)};
}

} // namespace tactix
