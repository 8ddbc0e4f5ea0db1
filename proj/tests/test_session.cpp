#include "support.hpp"

#include "tactix/session.hpp"

#include <doctest.h>

using namespace tactix;

namespace {

SessionConfig config(HapticMode mode = HapticMode::co_location)
{
    SessionConfig c;
    c.session_id = "s1";
    c.mode = mode;
    c.map_hash = test::shipped_map_hash();
    return c;
}

Envelope numbered(Envelope e, std::int64_t seq)
{
    e.seq = seq;
    return e;
}

std::vector<Action> to(const std::vector<Action>& actions, ConnId conn)
{
    std::vector<Action> out;
    for (const auto& a : actions)
        if (a.conn == conn) out.push_back(a);
    return out;
}

struct Fixture {
    MemoryTrace sink;
    Session session;
    std::vector<Action> start;

    explicit Fixture(HapticMode mode = HapticMode::co_location)
        : session(config(mode), test::shipped_map(), test::shipped_activity(), &sink)
    {
        CHECK(session.on_envelope(1, numbered(msg::hello(test::shipped_map_hash()), 1), 500).empty());
        start = session.on_envelope(2, numbered(msg::hello(test::shipped_map_hash(), "s1"), 1), 700);
    }
};

} // namespace

TEST_CASE("two clients join as A then B and both get session_start")
{
    Fixture f;
    CHECK(f.session.role_of(1) == Party::A);
    CHECK(f.session.role_of(2) == Party::B);
    REQUIRE(f.start.size() == 2);
    for (const auto& a : f.start) {
        CHECK(a.envelope.type == MessageType::session_start);
        CHECK(a.envelope.t_ms == 0);
        CHECK(a.envelope.from == Party::server);
        CHECK(session_config_from_json(a.envelope.payload) == config());
    }
    CHECK(to(f.start, 1)[0].envelope.payload["role"] == "A");
    CHECK(to(f.start, 2)[0].envelope.payload["role"] == "B");
    CHECK(f.session.started());
    CHECK(f.session.clock_ms(700) == 0);
    CHECK(f.session.clock_ms(1700) == 1000);
}

TEST_CASE("join rejections")
{
    Fixture f;
    auto r = f.session.on_envelope(3, numbered(msg::hello(test::shipped_map_hash()), 1), 800);
    REQUIRE(r.size() == 1);
    CHECK(r[0].envelope.type == MessageType::bye);
    CHECK(r[0].envelope.payload["reason"] == "session full");
    CHECK(r[0].close_after);

    Session s(config(), test::shipped_map(), test::shipped_activity());
    r = s.on_envelope(1, numbered(msg::hello("deadbeef"), 1), 0);
    REQUIRE(r.size() == 1);
    CHECK(r[0].envelope.payload["reason"] == "map mismatch");
    r = s.on_envelope(2, numbered(msg::hello(test::shipped_map_hash(), "other"), 1), 0);
    CHECK(r[0].envelope.payload["reason"] == "unknown session");
    CHECK(s.stats().rejected_joins == 2);
    CHECK_FALSE(s.role_of(1));
}

TEST_CASE("anything but hello first is a protocol violation")
{
    Session s(config(), test::shipped_map(), test::shipped_activity());
    const auto r = s.on_envelope(1, numbered(msg::pose(1, 1, 0), 1), 0);
    REQUIRE(r.size() == 1);
    CHECK(r[0].close_after);
    CHECK(s.stats().protocol_errors == 1);
}

TEST_CASE("poses are stamped, relayed and sampled")
{
    Fixture f;
    const auto r = f.session.on_envelope(1, numbered(msg::pose(102.3, 88.0, 0.5), 2), 2200);
    REQUIRE(r.size() == 1);
    CHECK(r[0].conn == 2);
    CHECK(r[0].envelope.from == Party::A);
    CHECK(r[0].envelope.t_ms == 1500);
    CHECK(r[0].envelope.seq == 2);
    REQUIRE(f.sink.trace.samples.size() == 1);
    const TraceSample& s = f.sink.trace.samples[0];
    CHECK(s.t_ms == 1500);
    CHECK(s.robot_id == Party::A);
    CHECK(s.x_mm == doctest::Approx(102.3));
    // just left of the nucleus, which starts near x = 110
    CHECK(s.zone_id == "cytosol");
    for (const auto& e : f.sink.events) CHECK(e.type != MessageType::pose);
}

TEST_CASE("out-of-bounds poses are clamped in the trace but relayed verbatim")
{
    Fixture f;
    const auto r = f.session.on_envelope(2, numbered(msg::pose(-3.0, 250.0, 0), 2), 900);
    REQUIRE(r.size() == 1);
    CHECK(r[0].envelope.payload["x_mm"] == -3.0);
    CHECK(f.sink.trace.samples.at(0).x_mm == 0.0);
    CHECK(f.sink.trace.samples.at(0).y_mm == 210.0);
}

TEST_CASE("seq regression disconnects the offender and notifies the peer")
{
    Fixture f;
    f.session.on_envelope(1, numbered(msg::pose(10, 10, 0), 5), 800);
    const auto r = f.session.on_envelope(1, numbered(msg::pose(10, 10, 0), 5), 900);
    const auto self = to(r, 1);
    const auto peer = to(r, 2);
    REQUIRE(self.size() == 1);
    CHECK(self[0].close_after);
    CHECK(self[0].envelope.payload["reason"].get<std::string>().find("seq regression") != std::string::npos);
    REQUIRE(peer.size() == 1);
    CHECK(peer[0].envelope.payload["reason"] == "peer lost");
    CHECK(peer[0].envelope.payload["role"] == "A");
    CHECK_FALSE(peer[0].close_after);
    CHECK(f.session.stats().protocol_errors == 1);
    CHECK_FALSE(f.session.role_of(1));
}

TEST_CASE("malformed frames disconnect the sender")
{
    Fixture f;
    const auto r = f.session.on_frame(2, "{\"v\":9}", 900);
    CHECK(to(r, 2).at(0).close_after);
    CHECK(to(r, 1).at(0).envelope.payload["reason"] == "peer lost");
}

TEST_CASE("consensus_edge outside consensus mode is a violation")
{
    Fixture f(HapticMode::co_location);
    const auto r = f.session.on_envelope(1, numbered(msg::consensus_edge(true), 2), 900);
    CHECK(to(r, 1).at(0).close_after);
    Fixture g(HapticMode::consensus);
    const auto ok = g.session.on_envelope(1, numbered(msg::consensus_edge(true), 2), 900);
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].conn == 2);
    CHECK(g.session.stats().protocol_errors == 0);
}

TEST_CASE("heartbeats every second of session time")
{
    Fixture f;
    CHECK(f.session.on_timer(1600).empty());
    auto r = f.session.on_timer(1700);
    REQUIRE(r.size() == 2);
    CHECK(r[0].envelope.type == MessageType::heartbeat);
    CHECK(r[0].envelope.t_ms == 1000);
    CHECK(f.session.on_timer(1800).empty());
    r = f.session.on_timer(4750);
    REQUIRE(r.size() == 2);
    CHECK(f.session.on_timer(4760).empty());
    CHECK(f.session.on_timer(5700).size() == 2);
}

TEST_CASE("quiz messages reach both parties and the log")
{
    Fixture f;
    f.session.on_envelope(1, numbered(msg::zone("nucleus"), 2), 800);
    f.session.on_envelope(2, numbered(msg::zone("nucleus"), 2), 800);
    auto r = f.session.on_envelope(1, numbered(msg::quiz_nav("q1"), 3), 900);
    CHECK(to(r, 1).size() == 1);
    CHECK(to(r, 2).size() == 1);
    f.session.on_envelope(1, numbered(msg::agree("q1", "nucleus"), 4), 1000);
    r = f.session.on_envelope(2, numbered(msg::agree("q1", "nucleus"), 3), 1100);
    bool accepted = false;
    for (const auto& a : to(r, 1))
        if (a.envelope.type == MessageType::submit_result) accepted = a.envelope.payload["accepted"].get<bool>();
    CHECK(accepted);
    CHECK(f.session.activity().state().answered_count() == 1);
    // refused requests are dropped without disconnecting
    r = f.session.on_envelope(1, numbered(msg::propose("q4", "nucleus"), 5), 1200);
    CHECK(r.empty());
    CHECK(f.session.stats().refused_requests == 1);
    CHECK(f.session.role_of(1) == Party::A);

    const auto replayed = replay_activity(f.sink.events, test::shipped_activity(), test::shipped_map());
    CHECK(replayed == f.session.activity().state());
}

TEST_CASE("server stamps never decrease")
{
    Fixture f;
    std::int64_t last = 0;
    std::int64_t seq = 2;
    for (std::int64_t now = 700; now < 6000; now += 37) {
        for (const auto& a : f.session.on_timer(now)) {
            CHECK(a.envelope.t_ms >= last);
            last = a.envelope.t_ms;
        }
        for (const auto& a : f.session.on_envelope(1 + seq % 2, numbered(msg::pose(50, 50, 0), seq / 2 + 1), now)) {
            CHECK(a.envelope.t_ms >= last);
            last = a.envelope.t_ms;
        }
        ++seq;
    }
}

TEST_CASE("a vacated role can be rejoined")
{
    Fixture f;
    const auto lost = f.session.on_disconnect(2, 1000);
    REQUIRE(lost.size() == 1);
    CHECK(lost[0].conn == 1);
    const auto r = f.session.on_envelope(7, numbered(msg::hello(test::shipped_map_hash()), 1), 1500);
    CHECK(f.session.role_of(7) == Party::B);
    REQUIRE(to(r, 7).size() == 1);
    CHECK(to(r, 7)[0].envelope.type == MessageType::session_start);
    CHECK(to(r, 7)[0].envelope.payload["role"] == "B");
    CHECK(to(r, 1).size() == 1);
}

TEST_CASE("bye leaves cleanly")
{
    Fixture f;
    const auto r = f.session.on_envelope(1, numbered(msg::bye("done"), 2), 900);
    CHECK(to(r, 1).at(0).close_after);
    CHECK(to(r, 2).at(0).envelope.payload["reason"] == "peer lost");
    CHECK(f.session.stats().protocol_errors == 0);
}

TEST_CASE("config json round-trips and digests are stable")
{
    SessionConfig c = config(HapticMode::consensus);
    c.coupling.k = 0.07;
    c.dynamics.v_max = 150;
    CHECK(session_config_from_json(to_json(c)) == c);
    CHECK(config_digest(c) == config_digest(session_config_from_json(to_json(c))));
    CHECK(config_digest(c) != config_digest(config()));
    SessionConfig bad = c;
    bad.pose_rate_hz = 30;
    CHECK_THROWS(bad.validate());
}
