#include "support.hpp"

#include "tactix/activity.hpp"
#include "tactix/errors.hpp"
#include "tactix/experiment.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace tactix;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunManifest small_manifest(const fs::path& out)
{
    RunManifest m;
    m.seeds = {1, 2};
    m.latency = {100, 50, 7};
    m.config.map_hash = test::shipped_map_hash();
    m.duration_s = 120;
    m.analysis.n_perm = 200;
    m.out_dir = out.string();
    return m;
}

} // namespace

TEST_CASE("manifest JSON round trip")
{
    RunManifest m = small_manifest("/tmp/x");
    m.modes = {HapticMode::none};
    m.agents.disagree_first = true;
    m.agents.itinerary_length = 3;
    m.analysis.hz = 20;
    m.config.coupling.k = 0.07;
    m.realtime = true;
    const RunManifest back = RunManifest::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    CHECK(back.config == m.config);
    CHECK(back.latency == m.latency);
    CHECK_THROWS_AS(RunManifest::from_json(nlohmann::json{{"modes", {"co_location"}}}), ParseError);
    auto bad_mode = m.to_json();
    bad_mode["modes"] = {"bogus"};
    CHECK_THROWS_AS(RunManifest::from_json(bad_mode), ParseError);
}

TEST_CASE("experiment outputs are byte-identical across runs")
{
    const auto& map = test::shipped_map();
    const auto& activity = test::shipped_activity();
    const fs::path one = test::scratch_dir("experiment_one");
    const fs::path two = test::scratch_dir("experiment_two");
    const auto agg1 = run_experiment(small_manifest(one), map, activity);
    const auto agg2 = run_experiment(small_manifest(two), map, activity);
    CHECK(agg1 == agg2);
    CHECK(slurp(one / "aggregate.json") == slurp(two / "aggregate.json"));
    for (const char* mode : {"co_location", "consensus"}) {
        for (const char* seed : {"seed_1", "seed_2"}) {
            for (const char* file : {"trace.csv", "events.jsonl", "report.json", "A_xy.csv", "B_xy.csv"}) {
                const auto a = slurp(one / mode / seed / file);
                CHECK_MESSAGE(!a.empty(), mode << "/" << seed << "/" << file);
                CHECK_MESSAGE(a == slurp(two / mode / seed / file), mode << "/" << seed << "/" << file);
            }
        }
    }
    CHECK(RunManifest::from_json(nlohmann::json::parse(slurp(one / "manifest.json"))).to_json() ==
          small_manifest(one).to_json());
}

TEST_CASE("aggregate compares the two haptic modes")
{
    RunManifest m = small_manifest({});
    m.out_dir.clear();
    std::vector<SeedRun> runs;
    const auto agg = run_experiment(m, test::shipped_map(), test::shipped_activity(), &runs);
    CHECK(runs.size() == 4);
    REQUIRE(agg.contains("comparison"));
    CHECK(agg["comparison"]["seeds_compared"] == 2);
    const double gap = agg["comparison"]["mean_r_gap"];
    const double co = agg["modes"]["co_location"]["mean_r"];
    const double cons = agg["modes"]["consensus"]["mean_r"];
    CHECK(gap == doctest::Approx(co - cons));
    for (const auto& run : runs) {
        CHECK(run.summary.score == 5);
        CHECK(run.result.session_stats.protocol_errors == 0);
    }
}

TEST_CASE("single seed, single mode gives one report and no comparison")
{
    RunManifest m = small_manifest(test::scratch_dir("experiment_single"));
    m.modes = {HapticMode::co_location};
    m.seeds = {4};
    const auto agg = run_experiment(m, test::shipped_map(), test::shipped_activity());
    CHECK_FALSE(agg.contains("comparison"));
    CHECK(agg["modes"]["co_location"]["runs"].size() == 1);
    CHECK(fs::exists(fs::path(m.out_dir) / "co_location" / "seed_4" / "report.json"));
}

TEST_CASE("empty seed list is rejected")
{
    RunManifest m = small_manifest({});
    m.seeds.clear();
    CHECK_THROWS_AS(run_experiment(m, test::shipped_map(), test::shipped_activity()), ValidationError);
}

TEST_CASE("replaying the recorded events reproduces the final quiz state")
{
    const auto& map = test::shipped_map();
    const auto& activity = test::shipped_activity();
    RunManifest m = small_manifest({});
    m.agents.disagree_first = true;
    for (HapticMode mode : {HapticMode::co_location, HapticMode::consensus}) {
        const SeedRun run = run_seed(m, mode, 3, map, activity);
        REQUIRE(run.result.quiz_finished);
        const ActivityState replayed = replay_activity(run.result.events, activity, map);
        CHECK(replayed.to_json() == run.result.final_activity_state);
        CHECK(replayed.quiz_report().score == 5);
    }
}

TEST_CASE("scripts for a seed are independent draws")
{
    const auto& map = test::shipped_map();
    const auto [a, b] = scripts_for_seed(6, map, {});
    CHECK(a.seed == 11);
    CHECK(b.seed == 12);
    CHECK(a.itinerary != b.itinerary);
    CHECK(scripts_for_seed(6, map, {}) == std::pair{a, b});
}
