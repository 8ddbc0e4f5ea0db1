#pragma once

#include "tactix/activity.hpp"
#include "tactix/agent.hpp"
#include "tactix/analytics.hpp"
#include "tactix/session.hpp"
#include "tactix/trace.hpp"
#include "tactix/transport.hpp"
#include "tactix/zone_map.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tactix {

struct PairOptions {
    Vec2 start_a{40.0, 105.0};
    Vec2 start_b{257.0, 105.0};
    /// Simulated time kept after the quiz finishes before the run stops.
    std::int64_t tail_ms = 1000;
    /// Stop as soon as the quiz is finished (plus tail); otherwise run the full duration.
    bool stop_when_finished = true;
    /// Pace the lockstep loop to the wall clock.
    bool realtime = false;
};

struct PairResult {
    Trace trace;
    std::vector<Envelope> events;
    nlohmann::json final_activity_state;
    SessionStats session_stats;
    ClientStats client_a;
    ClientStats client_b;
    bool quiz_finished = false;
    std::int64_t end_ms = 0;
};

/// Runs two scripted participants against an in-process session server over
/// simulated links, in lockstep simulated time at the session's sim rate.
/// Fully deterministic given scripts, config and latency profile.
PairResult run_pair(const AgentScript& script_a, const AgentScript& script_b, const SessionConfig& config,
                    const LatencyProfile& latency, double duration_s, const ZoneMap& map, const Activity& activity,
                    const PairOptions& options = {});

/// Parameters shared by every generated agent script.
struct AgentDefaults {
    int itinerary_length = 8;
    std::int64_t dwell_ms = 3000;
    double drag_gain = 0.08;
    double noise_std_mm = 5.0;
    bool disagree_first = false;
};

/// Random itinerary over all zones (no immediate repeats) drawn from seed.
AgentScript make_agent_script(std::uint64_t seed, const ZoneMap& map, const AgentDefaults& defaults);

/// Random in-bounds start position drawn from seed, 20 mm away from the edges.
Vec2 start_position(std::uint64_t seed, const ZoneMap& map);

/// Demo session of two agents sharing one itinerary (each with its own
/// jitter stream), over direct links, stopping shortly after the quiz.
PairResult run_demo(HapticMode mode, std::uint64_t seed, const std::string& map_hash, const ZoneMap& map,
                    const Activity& activity, const AgentDefaults& defaults = {});

/// Everything needed to reproduce an experiment.
struct RunManifest {
    std::vector<HapticMode> modes{HapticMode::co_location, HapticMode::consensus};
    std::vector<std::uint64_t> seeds;
    LatencyProfile latency; // seed is the base; each run derives its own
    SessionConfig config;   // mode is overridden per run
    AgentDefaults agents;
    double duration_s = 300;
    SummaryOptions analysis;
    std::string map_path;
    std::string activity_path;
    std::string out_dir;
    bool realtime = false;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

struct SeedRun {
    HapticMode mode;
    std::uint64_t seed;
    PairResult result;
    SessionSummary summary;
};

/// Scripts used for a seed: A draws from 2*seed - 1, B from 2*seed.
std::pair<AgentScript, AgentScript> scripts_for_seed(std::uint64_t seed, const ZoneMap& map, const AgentDefaults& d);

SeedRun run_seed(const RunManifest& manifest, HapticMode mode, std::uint64_t seed, const ZoneMap& map,
                 const Activity& activity);

/// trace.csv, events.jsonl, report.json (summary plus extra fields, final
/// quiz state and protocol error count) and the A/B plot CSVs.
void write_session_outputs(const std::filesystem::path& dir, const PairResult& result, const SessionSummary& summary,
                           const nlohmann::json& extra = nlohmann::json::object());

/// Runs every (mode, seed); when out_dir is set writes per-run trace CSV,
/// events JSONL, report JSON and plot CSVs, plus manifest.json and
/// aggregate.json. Returns the aggregate.
nlohmann::json run_experiment(const RunManifest& manifest, const ZoneMap& map, const Activity& activity,
                              std::vector<SeedRun>* runs = nullptr);

} // namespace tactix
