#include "support.hpp"

#include "tactix/activity.hpp"
#include "tactix/errors.hpp"
#include "tactix/rng.hpp"

#include <doctest.h>

#include <set>

using namespace tactix;
using nlohmann::json;

namespace {

ActivityState fresh() { return ActivityState(test::shipped_activity(), test::shipped_map()); }

Envelope from(Party who, Envelope e, std::int64_t t_ms)
{
    e.from = who;
    e.t_ms = t_ms;
    return e;
}

const std::optional<std::string> nucleus = std::string("nucleus");
const std::optional<std::string> golgi = std::string("golgi");

} // namespace

TEST_CASE("shipped activity content")
{
    const Activity& a = test::shipped_activity();
    REQUIRE(a.questions.size() == 5);
    CHECK(a.questions[0].text == "Which organelle contains most of the cell's genetic material?");
    CHECK(a.questions[1].text == "To which organelle would a protein arrive at to be packaged for export from the cell?");
    CHECK(a.questions[2].text == "Where is chemical energy or ATP (adenosine triphosphate) produced?");
    CHECK(a.questions[3].text == "Which organelle is capable of destroying the cell?");
    CHECK(a.questions[4].text == "What is the space in which all the organelles reside?");
    std::vector<std::string> key;
    for (const auto& q : a.questions) key.push_back(q.answer_zone_id);
    CHECK(key == std::vector<std::string>{"nucleus", "golgi", "mitochondrion", "lysosome", "cytosol"});
    REQUIRE(a.tasks.size() == 5);
    CHECK(a.tasks[0].text == "Locate the control centre of the cell");
    CHECK(a.tasks[1].text == "Pinpoint the organelle with digestive enzymes");
    CHECK(validate_activity(a, test::shipped_map()).empty());
}

TEST_CASE("validation names the offending question")
{
    Activity a = test::shipped_activity();
    a.questions[2].answer_zone_id = "ribosome";
    const auto problems = validate_activity(a, test::shipped_map());
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("q3") != std::string::npos);
    CHECK_THROWS_AS(ActivityState(a, test::shipped_map()), ValidationError);
    CHECK_THROWS_AS(load_activity("{\"tasks\": 3}"), ParseError);
    CHECK_THROWS_AS(load_activity("nope"), ParseError);
}

TEST_CASE("task ticks are first-writer and idempotent")
{
    ActivityState s = fresh();
    s.tick_task("t1", Party::B, 1200);
    REQUIRE(s.tasks()[0].done_by);
    CHECK(s.tasks()[0].done_by->who == Party::B);
    s.tick_task("t1", Party::A, 5000);
    CHECK(s.tasks()[0].done_by->who == Party::B);
    CHECK(s.tasks()[0].done_by->t_ms == 1200);
    CHECK_THROWS_AS(s.tick_task("t99", Party::A, 0), DomainError);
}

TEST_CASE("proposals are last-write-wins")
{
    ActivityState s = fresh();
    s.navigate("q1", 0);
    s.propose_answer("q1", Party::A, "nucleus");
    CHECK(s.question_state("q1").proposals == std::map<Party, std::string>{{Party::A, "nucleus"}});
    s.propose_answer("q1", Party::A, "golgi");
    CHECK(s.question_state("q1").proposals == std::map<Party, std::string>{{Party::A, "golgi"}});
    CHECK_THROWS_AS(s.propose_answer("q1", Party::A, "ribosome"), DomainError);
    CHECK_THROWS_AS(s.propose_answer("q2", Party::A, "golgi"), DomainError);
}

TEST_CASE("submission gate examples")
{
    ActivityState s = fresh();
    s.navigate("q1", 0);
    const std::map<Party, std::string> both{{Party::A, "nucleus"}, {Party::B, "nucleus"}};

    auto r = s.try_submit("q1", nucleus, golgi, both, 10);
    CHECK_FALSE(r.accepted);
    CHECK(r.reason == RejectReason::not_colocated);

    r = s.try_submit("q1", nucleus, nucleus, {{Party::A, "nucleus"}}, 20);
    CHECK_FALSE(r.accepted);
    CHECK(r.reason == RejectReason::awaiting_partner);

    r = s.try_submit("q1", nucleus, std::nullopt, both, 25);
    CHECK(r.reason == RejectReason::not_colocated);

    r = s.try_submit("q1", nucleus, nucleus, both, 30);
    CHECK(r.accepted);
    CHECK(r.correct == true);
    CHECK(s.question_state("q1").agreement == "nucleus");
    CHECK(s.current_question() == "q2");

    r = s.try_submit("q1", nucleus, nucleus, both, 40);
    CHECK(r.reason == RejectReason::already_answered);
    CHECK_THROWS_AS(s.propose_answer("q1", Party::A, "golgi"), DomainError);
}

TEST_CASE("votes must name the shared zone")
{
    ActivityState s = fresh();
    s.navigate("q1", 0);
    const auto r = s.try_submit("q1", golgi, golgi, {{Party::A, "golgi"}, {Party::B, "nucleus"}}, 5);
    CHECK(r.reason == RejectReason::awaiting_partner);
}

TEST_CASE("quiz report")
{
    SUBCASE("all correct")
    {
        ActivityState s = fresh();
        s.navigate("q1", 0);
        std::int64_t t = 0;
        for (const auto& q : test::shipped_activity().questions) {
            const std::optional<std::string> z = q.answer_zone_id;
            t += 30200;
            CHECK(s.try_submit(q.q_id, z, z, {{Party::A, *z}, {Party::B, *z}}, t).accepted);
        }
        const QuizReport r = s.quiz_report();
        CHECK(r.score == 5);
        CHECK(r.total == 5);
        CHECK(r.duration_s == doctest::Approx(151.0));
    }
    SUBCASE("all wrong")
    {
        ActivityState s = fresh();
        s.navigate("q1", 1000);
        for (const auto& q : test::shipped_activity().questions) {
            const std::optional<std::string> z = q.answer_zone_id == "golgi" ? "nucleus" : "golgi";
            const auto r = s.try_submit(q.q_id, z, z, {{Party::A, *z}, {Party::B, *z}}, 2000);
            CHECK(r.accepted);
            CHECK(r.correct == false);
        }
        CHECK(s.quiz_report().score == 0);
    }
    SUBCASE("unfinished")
    {
        ActivityState s = fresh();
        CHECK_THROWS_WITH_AS(s.quiz_report(), "quiz not finished", DomainError);
        s.navigate("q3", 0);
        CHECK_THROWS_AS(s.quiz_report(), DomainError);
    }
}

TEST_CASE("engine routes results")
{
    ActivityEngine engine(test::shipped_activity(), test::shipped_map());
    CHECK(engine.handle(from(Party::A, msg::zone("nucleus"), 0)).empty());
    CHECK(engine.handle(from(Party::B, msg::zone("nucleus"), 0)).empty());
    const auto nav = engine.handle(from(Party::A, msg::quiz_nav("q1"), 5));
    REQUIRE(nav.size() == 1);
    CHECK(nav[0].to == Recipient::both);

    auto out = engine.handle(from(Party::A, msg::agree("q1", "nucleus"), 10));
    REQUIRE(out.size() == 1);
    CHECK(out[0].to == Recipient::A);
    CHECK(out[0].envelope.payload["reason"] == "awaiting_partner");

    out = engine.handle(from(Party::B, msg::agree("q1", "nucleus"), 20));
    REQUIRE(out.size() == 2);
    CHECK(out[0].to == Recipient::both);
    CHECK(out[0].envelope.type == MessageType::submit_result);
    CHECK(out[0].envelope.payload["accepted"] == true);
    CHECK(out[0].envelope.payload["correct"] == true);
    CHECK(out[0].envelope.payload["zone_id"] == "nucleus");
    CHECK(out[0].envelope.payload["answered"] == 1);
    CHECK(out[1].envelope.type == MessageType::quiz_nav);
    CHECK(out[1].envelope.payload["q_id"] == "q2");

    CHECK_THROWS_AS(engine.handle(from(Party::A, msg::zone("ribosome"), 30)), DomainError);
}

TEST_CASE("randomized sequences never bypass the gate")
{
    const ZoneMap& map = test::shipped_map();
    const Activity& activity = test::shipped_activity();
    std::vector<std::string> zones;
    for (const auto& z : map.zones()) zones.push_back(z.id);
    Rng rng(2024);
    std::map<std::string, int> reasons;
    int accepted_total = 0;

    for (int run = 0; run < 2000; ++run) {
        ActivityEngine engine(activity, map);
        // independent bookkeeping of what the gate may rely on
        std::map<Party, std::string> live;
        std::map<std::string, std::map<Party, std::string>> votes;
        std::set<std::string> answered;
        const int length = static_cast<int>(rng.uniform_int(1, 60));
        for (int i = 0; i < length; ++i) {
            const Party who = rng.uniform_int(0, 1) ? Party::A : Party::B;
            const std::string zone = zones[static_cast<std::size_t>(rng.uniform_int(0, 4))];
            const std::string q = activity.questions[static_cast<std::size_t>(rng.uniform_int(0, 4))].q_id;
            Envelope e;
            switch (rng.uniform_int(0, 3)) {
            case 0: e = msg::zone(zone); break;
            case 1: e = msg::quiz_nav(q); break;
            case 2: e = msg::propose(q, zone); break;
            default: e = msg::agree(q, zone); break;
            }
            e = from(who, e, i);
            std::vector<Outbound> out;
            try {
                out = engine.handle(e);
            } catch (const DomainError&) {
                continue;
            }
            if (e.type == MessageType::zone) live[who] = zone;
            if (e.type == MessageType::agree && !answered.contains(q)) votes[q][who] = zone;
            for (const auto& o : out) {
                if (o.envelope.type != MessageType::submit_result) continue;
                const auto& p = o.envelope.payload;
                if (!p["accepted"].get<bool>()) {
                    ++reasons[p["reason"].get<std::string>()];
                    continue;
                }
                ++accepted_total;
                const std::string z = p["zone_id"];
                REQUIRE(live.contains(Party::A));
                REQUIRE(live.contains(Party::B));
                REQUIRE(live[Party::A] == z);
                REQUIRE(live[Party::B] == z);
                REQUIRE(votes[q][Party::A] == z);
                REQUIRE(votes[q][Party::B] == z);
                REQUIRE_FALSE(answered.contains(q));
                answered.insert(q);
            }
        }
        REQUIRE(engine.state().answered_count() == static_cast<int>(answered.size()));
    }
    CHECK(accepted_total > 0);
    CHECK(reasons["not_colocated"] > 0);
    CHECK(reasons["awaiting_partner"] > 0);
    CHECK(reasons["already_answered"] > 0);
}

TEST_CASE("replay reproduces the final state")
{
    ActivityEngine engine(test::shipped_activity(), test::shipped_map());
    std::vector<Envelope> log;
    auto send = [&](Envelope e) {
        engine.handle(e);
        log.push_back(e);
    };
    send(from(Party::A, msg::task_tick("t1"), 100));
    send(from(Party::A, msg::zone("golgi"), 200));
    send(from(Party::B, msg::zone("golgi"), 250));
    send(from(Party::B, msg::quiz_nav("q2"), 300));
    send(from(Party::A, msg::agree("q2", "golgi"), 400));
    send(from(Party::B, msg::agree("q2", "golgi"), 500));
    Envelope server_noise = msg::quiz_nav("q5");
    log.push_back(server_noise);
    const ActivityState replayed = replay_activity(log, test::shipped_activity(), test::shipped_map());
    CHECK(replayed == engine.state());
    CHECK(replayed.to_json() == engine.state().to_json());
    CHECK(replayed.current_question() == "q3");
}
