#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace tactix;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Runs the CLI with a shell-quoted argument string.
Run cli(const std::string& args)
{
    static const fs::path dir = test::scratch_dir("cli_io");
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + TACTIX_CLI + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const std::string shipped_map = q(test::data_path("cell_a4.map.json"));
const std::string shipped_activity = q(test::data_path("cell_activity.json"));

} // namespace

TEST_CASE("a subcommand is required")
{
    CHECK(cli("").code == 1);
    CHECK(cli("frobnicate").code == 1);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("serve flags")
{
    SUBCASE("unknown mode is a usage error")
    {
        const Run r = cli("serve --mode bogus --port 0");
        CHECK(r.code == 1);
        CHECK(r.err.find("unknown mode 'bogus'") != std::string::npos);
    }
    SUBCASE("missing map file is a runtime error")
    {
        const Run r = cli("serve --map /nonexistent/map.json --port 0");
        CHECK(r.code == 3);
        CHECK(r.err.find("file not found") != std::string::npos);
    }
    SUBCASE("banner names the session")
    {
        const fs::path out = test::scratch_dir("cli_serve");
        const Run r = cli("serve --map " + shipped_map + " --activity " + shipped_activity +
                             " --mode consensus --port 0 --session-id lab7 --duration 0.5 --out " + q(out));
        CHECK(r.code == 0);
        CHECK(r.out.find("tactix serve: session lab7, mode consensus, listening on 127.0.0.1:") != std::string::npos);
        CHECK(r.out.find("ws /ws/session/lab7") != std::string::npos);
        CHECK(slurp(out / "trace.csv").find("t_ms,robot_id,x_mm,y_mm,theta_rad,zone_id") != std::string::npos);
        CHECK(json::parse(slurp(out / "session_config.json")).at("mode") == "consensus");
    }
}

TEST_CASE("experiment flags")
{
    CHECK(cli("experiment --seeds ''").code == 1);
    CHECK(cli("experiment --seeds 5..x").code == 1);
    CHECK(cli("experiment --latency fast:5").code == 1);
    CHECK(cli("experiment --mode co_location,bogus").code == 1);
}

TEST_CASE("experiment re-run from its manifest is byte-identical")
{
    const fs::path first = test::scratch_dir("cli_exp_first");
    const fs::path second = test::scratch_dir("cli_exp_second");
    const Run r = cli("experiment --map " + shipped_map + " --activity " + shipped_activity +
                         " --seeds 1..2 --latency 100:50 --duration 120 --n-perm 100 --out " + q(first));
    REQUIRE(r.code == 0);
    const json agg = json::parse(r.out);
    CHECK(agg.contains("comparison"));
    CHECK(agg["modes"]["co_location"]["runs"].size() == 2);

    const Run again = cli("experiment --manifest " + q(first / "manifest.json") + " --out " + q(second));
    REQUIRE(again.code == 0);
    CHECK(again.out == r.out);
    for (const char* rel : {"co_location/seed_1/trace.csv", "co_location/seed_1/report.json",
                            "consensus/seed_2/trace.csv", "consensus/seed_2/report.json",
                            "consensus/seed_2/events.jsonl", "aggregate.json"}) {
        const auto a = slurp(first / rel);
        CHECK_MESSAGE(!a.empty(), rel);
        CHECK_MESSAGE(a == slurp(second / rel), rel);
    }
}

TEST_CASE("analyze")
{
    const std::string trace = q(test::test_data_path("demo_co_location/trace.csv"));
    const std::string events = q(test::test_data_path("demo_co_location/events.jsonl"));
    SUBCASE("golden demo trace gives a full report")
    {
        const fs::path out = test::scratch_dir("cli_analyze");
        const Run r = cli("analyze --trace " + trace + " --events " + events + " --n-perm 200 --out " + q(out));
        CHECK(r.code == 0);
        CHECK(r.err.empty());
        const json report = json::parse(slurp(out / "report.json"));
        for (const char* key : {"quiz_duration_s", "score", "dwell_s", "tandem_fraction", "correlation"})
            CHECK_MESSAGE(report.contains(key), key);
        CHECK(report["score"] == 5);
        CHECK(slurp(out / "A_xy.csv").starts_with("t_ms,x_mm,y_mm\n"));
        CHECK(fs::exists(out / "B_xy.csv"));
    }
    SUBCASE("zero rate is a usage error")
    {
        CHECK(cli("analyze --trace " + trace + " --hz 0").code == 1);
    }
    SUBCASE("a trace without robot B")
    {
        const fs::path dir = test::scratch_dir("cli_analyze_a_only");
        spit(dir / "a.csv", "t_ms,robot_id,x_mm,y_mm,theta_rad,zone_id\n0,A,1,1,0,cytosol\n100,A,2,2,0,cytosol\n");
        const Run r = cli("analyze --trace " + q(dir / "a.csv"));
        CHECK(r.code == 3);
        CHECK(r.err.find("both robots required") != std::string::npos);
    }
    SUBCASE("events without the end of the quiz")
    {
        const Run r = cli("analyze --trace " + trace + " --n-perm 50");
        CHECK(r.code == 0);
        CHECK(r.err.find("warning: quiz not finished") != std::string::npos);
    }
    SUBCASE("malformed trace is a validation error")
    {
        const fs::path dir = test::scratch_dir("cli_analyze_bad");
        spit(dir / "bad.csv", "t_ms,robot_id,x_mm,y_mm,theta_rad,zone_id\n0,Q,1,1,0,cytosol\n");
        CHECK(cli("analyze --trace " + q(dir / "bad.csv")).code == 2);
    }
}

TEST_CASE("validate")
{
    SUBCASE("shipped files")
    {
        const Run r = cli("validate --map " + shipped_map + " --activity " + shipped_activity);
        CHECK(r.code == 0);
    }
    SUBCASE("an answer naming an unknown zone")
    {
        json activity = json::parse(read_file(test::data_path("cell_activity.json")));
        activity["questions"][2]["answer_zone_id"] = "vacuole";
        const std::string q_id = activity["questions"][2]["id"];
        const fs::path dir = test::scratch_dir("cli_validate");
        spit(dir / "activity.json", activity.dump());
        const Run r = cli("validate --map " + shipped_map + " --activity " + q(dir / "activity.json"));
        CHECK(r.code == 2);
        CHECK(r.err.find(q_id) != std::string::npos);
        CHECK(r.err.find("vacuole") != std::string::npos);
    }
    SUBCASE("unreadable file")
    {
        const Run r = cli("validate --map /nonexistent/map.json");
        CHECK(r.code == 3);
    }
    SUBCASE("malformed map")
    {
        const fs::path dir = test::scratch_dir("cli_validate_map");
        spit(dir / "map.json", "{\"width_mm\": 297");
        CHECK(cli("validate --map " + q(dir / "map.json")).code == 2);
    }
}

TEST_CASE("replay rebuilds the quiz state from the golden events")
{
    const Run r = cli("replay --events " + q(test::test_data_path("demo_consensus/events.jsonl")) + " --map " +
                         shipped_map + " --activity " + shipped_activity);
    REQUIRE(r.code == 0);
    const json state = json::parse(r.out);
    REQUIRE(state["questions"].size() == 5);
    for (const auto& question : state["questions"]) CHECK(question["result"]["correct"] == true);
    CHECK(state["current"].is_null());
}

TEST_CASE("demo writes a session record")
{
    const fs::path out = test::scratch_dir("cli_demo");
    const Run r = cli("demo --mode co_location --seed 1 --out " + q(out) + " --map " + shipped_map +
                         " --activity " + shipped_activity);
    REQUIRE(r.code == 0);
    // The frozen golden files came from this exact command.
    CHECK(slurp(out / "trace.csv") == slurp(test::test_data_path("demo_co_location/trace.csv")));
    CHECK(slurp(out / "events.jsonl") == slurp(test::test_data_path("demo_co_location/events.jsonl")));
    CHECK(json::parse(slurp(out / "report.json"))["protocol_errors"] == 0);
}
