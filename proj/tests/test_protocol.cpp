#include "tactix/errors.hpp"
#include "tactix/protocol.hpp"
#include "tactix/rng.hpp"

#include <doctest.h>

using namespace tactix;
using nlohmann::json;

TEST_CASE("pose envelope round-trips")
{
    Envelope e = msg::pose(102.3, 88.0, 0.25);
    e.seq = 41;
    e.t_ms = 1500;
    e.from = Party::B;
    const std::string frame = encode(e);
    CHECK(frame.back() == '\n');
    CHECK(std::count(frame.begin(), frame.end(), '\n') == 1);
    CHECK(decode(frame) == e);
}

TEST_CASE("every builder round-trips")
{
    const std::vector<Envelope> all{msg::hello("abc", "s1"), msg::pose(1, 2, 3),         msg::zone("nucleus"),
                                    msg::consensus_edge(true),  msg::consensus_edge(false), msg::task_tick("t1"),
                                    msg::quiz_nav("q1"),         msg::propose("q1", "golgi"), msg::agree("q1", "golgi"),
                                    msg::heartbeat(),            msg::bye("done")};
    std::int64_t seq = 0;
    for (Envelope e : all) {
        e.seq = ++seq;
        CHECK(decode(encode(e)) == e);
    }
}

TEST_CASE("field order is irrelevant")
{
    const auto a = decode(R"({"v":1,"type":"zone","seq":3,"t_ms":10,"from":"A","payload":{"zone_id":"golgi"}})");
    const auto b = decode(R"({"payload":{"zone_id":"golgi"},"from":"A","t_ms":10,"seq":3,"type":"zone","v":1})");
    CHECK(a == b);
}

TEST_CASE("decode rejects bad frames")
{
    CHECK_THROWS_WITH_AS(decode(R"({"v":2,"type":"heartbeat","seq":1,"t_ms":0,"from":"A","payload":{}})"),
                         doctest::Contains("version mismatch"), ProtocolError);
    CHECK_THROWS_WITH_AS(decode(R"({"v":1,"type":"teleport","seq":1,"t_ms":0,"from":"A","payload":{}})"),
                         doctest::Contains("unknown message type"), ProtocolError);
    CHECK_THROWS_WITH_AS(decode("{\"v\":1,"), doctest::Contains("malformed JSON"), ProtocolError);
    CHECK_THROWS_AS(decode(R"({"v":1,"type":"pose","seq":1,"t_ms":0,"from":"A","payload":{"x_mm":1}})"), ProtocolError);
    CHECK_THROWS_AS(decode(R"({"v":1,"type":"pose","seq":1,"t_ms":0,"from":"C","payload":{"x_mm":1,"y_mm":1,"theta_rad":0}})"),
                    ProtocolError);
    CHECK_THROWS_AS(decode(R"({"v":1,"type":"consensus_edge","seq":1,"t_ms":0,"from":"A","payload":{"edge":"maybe"}})"),
                    ProtocolError);
    CHECK_THROWS_AS(decode("[]"), ProtocolError);
}

TEST_CASE("framer waits for the terminator")
{
    LineFramer f;
    const std::string frame = encode(msg::heartbeat());
    f.feed(std::string_view(frame).substr(0, 10));
    CHECK_FALSE(f.next());
    CHECK(f.has_partial());
    f.feed(std::string_view(frame).substr(10));
    const auto line = f.next();
    REQUIRE(line);
    CHECK(decode(*line) == msg::heartbeat());
    CHECK_FALSE(f.has_partial());
}

TEST_CASE("framer splits arbitrary chunkings identically")
{
    std::string stream;
    std::vector<Envelope> sent;
    for (int i = 1; i <= 200; ++i) {
        Envelope e = msg::pose(i, i * 0.5, 0);
        e.seq = i;
        sent.push_back(e);
        stream += encode(e);
    }
    Rng rng(12);
    LineFramer f;
    std::vector<Envelope> got;
    for (std::size_t pos = 0; pos < stream.size();) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 97));
        f.feed(std::string_view(stream).substr(pos, n));
        pos += n;
        while (auto line = f.next()) got.push_back(decode(*line));
    }
    CHECK(got == sent);
}

TEST_CASE("oversized lines are a protocol error")
{
    LineFramer f(64);
    CHECK_THROWS_AS(f.feed(std::string(100, 'x')), ProtocolError);
}

TEST_CASE("names")
{
    CHECK(parse_message_type("submit_result") == MessageType::submit_result);
    CHECK_FALSE(parse_message_type("nope"));
    CHECK(to_string(Party::server) == "server");
    CHECK(parse_party("B") == Party::B);
}
